"""Haar sampling on the truncated infinite torus and Monte Carlo p-norms.

Only the coordinates a series actually depends on are materialized; the
others integrate out exactly under the product measure.  Samples are drawn
in fixed blocks of :data:`BLOCK` points, block ``b`` from the substream
``("torus", b)``, with coordinate ``j`` of a block always taken from the same
slice of that substream.  Two series evaluated with the same seed therefore
see the same values of ``w_1, w_2, ...`` regardless of how many coordinates
each needs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rng import SeedStreams, as_streams
from .series import CoefficientSeries, DilatedSeries, dilate
from .validation import (
    ValidationError,
    check_exponent,
    check_ladder,
    check_positive_int,
    check_radius,
    check_samples,
)

__all__ = [
    "BLOCK",
    "TorusPoint",
    "NormEstimate",
    "sample_torus",
    "torus_block",
    "evaluate",
    "sample_values",
    "summarize",
    "pth_power",
    "mc_norm",
    "norm_profile",
    "profile_to_csv",
]

BLOCK = 1024
# Upper bound on complex entries held per evaluation chunk (about 64 MB).
_CHUNK_ENTRIES = 1 << 22

CSV_FIELDS = ("label", "p", "r", "mean", "stderr", "samples", "seed")


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus restricted to its first ``dim`` coordinates."""

    coordinates: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coordinates, dtype=complex).reshape(-1)
        if np.any(np.abs(np.abs(c) - 1.0) > 1e-12):
            raise ValidationError("torus coordinates must have modulus 1")
        c.flags.writeable = False
        object.__setattr__(self, "coordinates", c)

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def rotated(self, j: int, phase: complex) -> "TorusPoint":
        """Copy with coordinate ``j`` (1-based) multiplied by the unimodular ``phase``."""
        c = self.coordinates.copy()
        c[j - 1] *= phase
        return TorusPoint(c)


@dataclass(frozen=True)
class NormEstimate:
    """Monte Carlo estimate of ``||F_[r]||_p**p`` with its provenance."""

    p: float
    r: float
    mean: float
    stderr: float
    samples: int
    seed: int
    label: str = ""
    stream: tuple[int, ...] = field(default=())

    @property
    def norm(self) -> float:
        """The p-norm itself, ``mean**(1/p)``."""
        return self.mean ** (1.0 / self.p)

    def to_json(self) -> dict:
        out = asdict(self)
        out["stream"] = list(self.stream)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NormEstimate":
        obj = dict(obj)
        obj["stream"] = tuple(obj.get("stream", ()))
        return cls(**obj)

    def csv_row(self) -> list:
        return [self.label, self.p, self.r, self.mean, self.stderr, self.samples, self.seed]


def profile_to_csv(estimates) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for est in estimates:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in est.csv_row()])
    return buf.getvalue()


def torus_block(streams: SeedStreams, block: int, dim: int, size: int = BLOCK) -> np.ndarray:
    """Coordinates ``(dim, size)`` of sample block ``block``; row ``j`` is coordinate ``j+1``."""
    gen = streams.generator("torus", block)
    theta = gen.random((max(dim, 1), BLOCK))[:dim, :size]
    return np.exp(2j * np.pi * theta)


def sample_torus(dim: int, rng) -> TorusPoint:
    """One Haar-distributed point with ``dim`` coordinates.

    ``rng`` is a ``numpy.random.Generator`` (advanced in place) or a seed /
    :class:`SeedStreams`, in which case the first point of the torus stream
    is returned.
    """
    dim = check_positive_int(dim, "dim")
    if isinstance(rng, np.random.Generator):
        theta = rng.random(dim)
        return TorusPoint(np.exp(2j * np.pi * theta))
    return TorusPoint(torus_block(as_streams(rng), 0, dim, 1)[:, 0])


def evaluate(F, w: TorusPoint) -> complex:
    """``sum_n c_n w**alpha(n)`` for a (dilated) series at one torus point."""
    if isinstance(F, CoefficientSeries):
        F = dilate(F, 1.0)
    if w.dim < F.dim:
        bad = next(int(n) for n, k in zip(F.indices.tolist(), _key_dims(F)) if k > w.dim)
        raise ValidationError(
            f"torus point has {w.dim} coordinates but index {bad} needs {F.dim}"
        )
    if len(F.indices) == 0:
        return 0j
    monomials = F.basis.evaluate(w.coordinates[: max(F.dim, 1)])[:, 0]
    return complex(np.dot(F.values, monomials))


def _key_dims(F) -> list[int]:
    from .monomial import PRIMES

    return [PRIMES.factor_pairs(n)[-1][0] if n > 1 else 0 for n in F.indices.tolist()]


def sample_values(series: CoefficientSeries, coeff_rows, samples: int, rng, transform=None) -> np.ndarray:
    """Values of several coefficient vectors over the same torus sample.

    ``coeff_rows`` has shape ``(L, len(series))`` and gives ``L`` coefficient
    vectors on the keys of ``series``.  Returns complex values of shape
    ``(L, samples)``.  ``transform`` (optional) maps each coordinate block to
    a new one before evaluation, e.g. to rotate a coordinate.
    """
    streams = as_streams(rng)
    C = np.atleast_2d(np.asarray(coeff_rows, dtype=complex))
    out = np.zeros((C.shape[0], samples), dtype=complex)
    if len(series) == 0:
        return out
    basis = series.basis
    dim = basis.dim
    chunk = max(1, min(BLOCK, _CHUNK_ENTRIES // max(basis.n_nodes, 1)))
    for b in range(math.ceil(samples / BLOCK)):
        start = b * BLOCK
        size = min(BLOCK, samples - start)
        coords = torus_block(streams, b, dim, size)
        if transform is not None:
            coords = transform(coords)
        for lo in range(0, size, chunk):
            hi = min(size, lo + chunk)
            out[:, start + lo : start + hi] = C @ basis.evaluate(coords[:, lo:hi])
    return out


def summarize(values) -> tuple[float, float]:
    """Mean and CLT standard error, both accumulated with compensated summation."""
    v = np.asarray(values, dtype=float)
    S = len(v)
    v0 = float(v[0])
    mean = v0 + math.fsum((v - v0).tolist()) / S
    if S < 2:
        return mean, 0.0
    var = math.fsum(((v - mean) ** 2).tolist()) / (S - 1)
    return mean, math.sqrt(var / S)


def pth_power(values: np.ndarray, p: float) -> np.ndarray:
    mod = np.abs(values)
    if p == 2.0:
        return values.real * values.real + values.imag * values.imag
    if p == 1.0:
        return mod
    return mod**p


def norm_profile(F: CoefficientSeries, p: float, ladder, samples: int = 10_000, rng=None) -> list[NormEstimate]:
    """Estimates of ``||F_[r]||_p**p`` for each ``r`` in ``ladder``.

    All radii share one torus sample (common random numbers), so the
    estimates are positively correlated and their differences have small
    variance.
    """
    if isinstance(F, DilatedSeries):
        F = F.as_series()
    p = check_exponent(p)
    ladder = check_ladder(ladder)
    samples = check_samples(samples)
    streams = as_streams(rng)
    rows = np.array([dilate(F, r).values for r in ladder]).reshape(len(ladder), len(F))
    vals = sample_values(F, rows, samples, streams)
    out = []
    for r, row in zip(ladder, vals):
        mean, se = summarize(pth_power(row, p))
        out.append(NormEstimate(p, r, mean, se, samples, streams.seed, F.label, streams.path))
    return out


def mc_norm(F: CoefficientSeries, p: float, r: float, samples: int = 10_000, rng=None) -> NormEstimate:
    """Monte Carlo estimate of ``int |F_[r]|**p dm`` over the torus."""
    return norm_profile(F, p, [check_radius(r)], samples, rng)[0]
