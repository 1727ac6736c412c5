"""Named, splittable random streams derived from one master seed.

Every consumer asks for a generator by a stream name plus integer path
(``streams.generator("torus", block)``).  The generator is a counter-based
Philox keyed by ``SeedSequence(seed, spawn_key=path)``, so the numbers a
block sees depend only on the seed and its path, never on the order in which
blocks are evaluated.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .validation import U64_MAX, ValidationError

__all__ = ["SeedStreams", "as_streams", "STREAM_CODES"]

STREAM_CODES = {
    "torus": 1,
    "bernoulli": 2,
    "steinhaus": 3,
    "gaussian": 4,
    "outer": 5,
    "realization": 6,
    "probe": 7,
    "trial": 8,
}


def _code(name) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    if name in STREAM_CODES:
        return STREAM_CODES[name]
    # stable across runs and platforms, unlike hash()
    return 1000 + zlib.crc32(str(name).encode("utf-8"))


@dataclass(frozen=True)
class SeedStreams:
    """A master seed plus a path prefix; ``spawn`` extends the prefix."""

    seed: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 0 <= int(self.seed) <= U64_MAX:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    def spawn(self, *path) -> "SeedStreams":
        return SeedStreams(self.seed, self.path + tuple(_code(p) for p in path))

    def generator(self, name, *index) -> np.random.Generator:
        key = self.path + (_code(name),) + tuple(int(i) for i in index)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=key)))

    def record(self) -> dict:
        """JSON-friendly provenance of this stream family."""
        return {"seed": self.seed, "path": list(self.path)}


def as_streams(rng) -> SeedStreams:
    """Accept a :class:`SeedStreams` or a bare integer seed."""
    if isinstance(rng, SeedStreams):
        return rng
    if rng is None:
        raise ValidationError("a seed is required; wall-clock seeding is not supported")
    return SeedStreams(rng)
