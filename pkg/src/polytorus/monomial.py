"""Indexing of monomials on the infinite torus by positive integers.

The integer ``n = p_1**a_1 * ... * p_k**a_k`` labels the monomial
``z_1**a_1 * ... * z_k**a_k``.  Its *weight* ``a_1 + 2*a_2 + ... + k*a_k``
is the exponent picked up by the coefficient of ``n`` under the dilation
``(z_1, z_2, ...) -> (r*z_1, r**2*z_2, ...)``.
"""

from __future__ import annotations

import math
import threading
from array import array
from dataclasses import dataclass
from collections.abc import Sequence
from typing import Iterator, NamedTuple, Union

import numpy as np

from .validation import (
    DomainError,
    IndexOverflowError,
    U64_MAX,
    ValidationError,
    check_positive_int,
)

__all__ = [
    "PrimeTable",
    "PRIMES",
    "ExponentVector",
    "MonomialIndex",
    "MaxIndex",
    "MaxWeight",
    "TruncationPolicy",
    "parse_truncation",
    "factorize",
    "index_of",
    "weight",
    "enumerate_indices",
    "weight_graded_indices",
    "in_abschnitt",
    "weights_up_to",
]

# Beyond this the prime-index lookup needed for weights stops being desk scale.
MAX_SIEVE = 2 * 10**7


_EAGER_SIEVE = 1 << 24


class PrimeTable:
    """Cached smallest-prime-factor sieve that grows on demand.

    Reads are lock free; growth is serialized and swaps in a fresh snapshot,
    so a reader always sees a consistent ``(limit, spf, primes, pindex)``.
    """

    def __init__(self, limit: int = 1 << 16):
        self._lock = threading.Lock()
        self._state = self._build(max(int(limit), 16))

    @staticmethod
    def _build(limit: int):
        spf = np.zeros(limit + 1, dtype=np.int32)
        for p in range(2, math.isqrt(limit) + 1):
            if spf[p] == 0:
                block = spf[p * p :: p]
                block[block == 0] = p
        idx = np.flatnonzero(spf == 0)
        idx = idx[idx >= 2]
        spf[idx] = idx
        primes = idx.astype(np.int64)
        pindex = np.zeros(limit + 1, dtype=np.int32)
        pindex[primes] = np.arange(1, len(primes) + 1)
        # array.array indexing returns plain ints far faster than numpy scalars
        return (limit, array("i", spf.tobytes()), primes, array("i", pindex.tobytes()),
                array("q", primes.tobytes()))

    @property
    def limit(self) -> int:
        return self._state[0]

    def ensure(self, limit: int) -> None:
        """Extend the sieve so that it covers every integer up to ``limit``."""
        if limit <= self._state[0]:
            return
        if limit > MAX_SIEVE:
            raise ValidationError(
                f"prime table would need to reach {limit}, beyond the supported {MAX_SIEVE}"
            )
        with self._lock:
            if limit <= self._state[0]:
                return
            new = max(limit, 2 * self._state[0])
            self._state = self._build(min(new, MAX_SIEVE))

    def ensure_count(self, count: int) -> None:
        """Extend the sieve until it holds at least ``count`` primes."""
        while len(self._state[2]) < count:
            lim = self._state[0]
            if count > 5:
                # Rosser's bound p_k < k (ln k + ln ln k) for k >= 6
                guess = int(count * (math.log(count) + math.log(math.log(count)))) + 1
                lim = max(lim + 1, guess)
            else:
                lim = max(lim + 1, 16)
            self.ensure(lim)

    def nth_prime(self, j: int) -> int:
        """The ``j``-th prime, 1-based."""
        self.ensure_count(j)
        return int(self._state[2][j - 1])

    def primes(self, count: int) -> np.ndarray:
        self.ensure_count(count)
        return self._state[2][:count]

    def prime_index(self, p: int) -> int:
        self.ensure(p)
        j = int(self._state[3][p])
        if j == 0:
            raise ValidationError(f"{p} is not prime")
        return j

    def prime_indices(self, ns) -> np.ndarray:
        """Vectorized ``prime_index`` that returns 0 for non-primes."""
        ns = np.asarray(ns, dtype=np.uint64)
        out = np.zeros(len(ns), dtype=np.int64)
        if len(ns) == 0:
            return out
        small = ns <= np.uint64(MAX_SIEVE)
        if small.any():
            self.ensure(int(ns[small].max()))
            pindex = np.frombuffer(self._state[3], dtype=np.int32)
            out[small] = pindex[ns[small].astype(np.int64)]
        for i in np.flatnonzero(~small).tolist():
            pairs = self.factor_pairs(int(ns[i]))
            if len(pairs) == 1 and pairs[0][1] == 1:
                out[i] = pairs[0][0]
        return out

    def factor_pairs(self, n: int) -> list[tuple[int, int]]:
        """``[(prime_index, exponent), ...]`` for ``n`` in increasing prime order."""
        state = self._state
        if n > state[0]:
            if n > _EAGER_SIEVE:
                return self._factor_large(n)
            self.ensure(n)
            state = self._state
        _, spf, _, pindex, _ = state
        out: list[tuple[int, int]] = []
        while n > 1:
            p = spf[n]
            n //= p
            e = 1
            # spf[1] == 0, so this stops at the last factor
            while spf[n] == p:
                n //= p
                e += 1
            out.append((pindex[p], e))
        return out

    def _factor_large(self, n: int) -> list[tuple[int, int]]:
        out: list[tuple[int, int]] = []
        j = 0
        while True:
            plist = self._state[4]
            if j >= len(plist):
                if self._state[0] >= MAX_SIEVE:
                    break
                self.ensure(min(2 * self._state[0], MAX_SIEVE))
                continue
            p = plist[j]
            j += 1
            if p * p > n:
                break
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                out.append((j, e))
        if n > 1:
            if n > MAX_SIEVE:
                raise ValidationError(
                    f"prime factor {n} exceeds the supported prime-index range ({MAX_SIEVE})"
                )
            out.append((self.prime_index(n), 1))
        return out


PRIMES = PrimeTable()


class ExponentVector(Sequence):
    """Immutable dense view of a prime-exponent vector stored by its support.

    Behaves like the tuple ``(a_1, ..., a_k)`` with ``a_k != 0`` and compares
    equal to it, but only stores the nonzero ``(j, a_j)`` pairs: the vector of
    a large prime is long and almost entirely zero.
    """

    __slots__ = ("_support", "_len")

    def __init__(self, support=()):
        self._support = tuple((int(j), int(e)) for j, e in support if e)
        self._len = self._support[-1][0] if self._support else 0

    @classmethod
    def _trusted(cls, support: tuple) -> "ExponentVector":
        # support already canonical: increasing j, no zero exponents
        obj = object.__new__(cls)
        obj._support = support
        obj._len = support[-1][0] if support else 0
        return obj

    @classmethod
    def from_dense(cls, alpha) -> "ExponentVector":
        return cls((j, e) for j, e in enumerate(alpha, start=1))

    @property
    def support(self) -> tuple[tuple[int, int], ...]:
        """Nonzero entries as ``((j, a_j), ...)`` with ``j`` 1-based and increasing."""
        return self._support

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, i):
        if isinstance(i, slice):
            return tuple(self)[i]
        if i < 0:
            i += self._len
        if not 0 <= i < self._len:
            raise IndexError("exponent vector index out of range")
        for j, e in self._support:
            if j == i + 1:
                return e
        return 0

    def __iter__(self):
        prev = 0
        for j, e in self._support:
            yield from (0,) * (j - prev - 1)
            yield e
            prev = j

    def __eq__(self, other):
        if isinstance(other, ExponentVector):
            return self._support == other._support
        if isinstance(other, (tuple, list)):
            return len(other) == self._len and tuple(self) == tuple(other)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self))

    def __repr__(self) -> str:
        return repr(tuple(self))


class MonomialIndex(NamedTuple):
    """An integer ``n`` together with its prime-exponent vector and weight."""

    n: int
    alpha: ExponentVector
    weight: int

    @property
    def dim(self) -> int:
        """Index of the largest prime dividing ``n`` (0 for ``n == 1``)."""
        return len(self.alpha)


@dataclass(frozen=True, slots=True)
class MaxIndex:
    """All ``n <= value``."""

    value: int

    def __post_init__(self):
        check_positive_int(self.value, "max_index")

    def admits(self, n: int) -> bool:
        return 1 <= n <= self.value

    def to_json(self) -> dict:
        return {"type": "max_index", "value": int(self.value)}

    def __str__(self) -> str:
        return f"max_index:{self.value}"


@dataclass(frozen=True, slots=True)
class MaxWeight:
    """All ``n`` whose weight is at most ``value``."""

    value: int

    def __post_init__(self):
        check_positive_int(self.value, "max_weight", minimum=0)

    def admits(self, n: int) -> bool:
        return n >= 1 and weight(n) <= self.value

    def to_json(self) -> dict:
        return {"type": "max_weight", "value": int(self.value)}

    def __str__(self) -> str:
        return f"max_weight:{self.value}"


TruncationPolicy = Union[MaxIndex, MaxWeight]


def parse_truncation(spec) -> TruncationPolicy:
    """Build a policy from ``"max_index:N"``, ``"max_weight:W"`` or its JSON dict."""
    if isinstance(spec, (MaxIndex, MaxWeight)):
        return spec
    if isinstance(spec, dict):
        kind, value = spec.get("type"), spec.get("value")
    else:
        kind, sep, value = str(spec).partition(":")
        if not sep:
            raise ValidationError(f"truncation must look like max_index:N or max_weight:W, got {spec!r}")
        try:
            value = int(value)
        except ValueError:
            raise ValidationError(f"truncation value must be an integer, got {value!r}") from None
    if kind == "max_index":
        return MaxIndex(value)
    if kind == "max_weight":
        return MaxWeight(value)
    raise ValidationError(f"unknown truncation type {kind!r}")


def _check_index(n) -> int:
    if type(n) is int and 0 < n <= U64_MAX:
        return n
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError("index must be a positive integer")
    n = int(n)
    if n > U64_MAX:
        raise IndexOverflowError(f"index {n} exceeds the unsigned 64-bit range")
    return n


def factorize(n: int) -> MonomialIndex:
    """Prime-exponent vector and weight of ``n``.

    >>> factorize(12)
    MonomialIndex(n=12, alpha=(2, 1), weight=4)
    """
    if type(n) is not int or not 0 < n <= U64_MAX:
        n = _check_index(n)
    pairs = PRIMES.factor_pairs(n)
    w = 0
    for j, e in pairs:
        w += j * e
    return MonomialIndex(n, ExponentVector._trusted(tuple(pairs)), w)


def weight(n: int) -> int:
    n = _check_index(n)
    return sum(j * e for j, e in PRIMES.factor_pairs(n))


def index_of(alpha) -> int:
    """Inverse of :func:`factorize`: the integer whose exponent vector is ``alpha``."""
    if isinstance(alpha, ExponentVector):
        support = alpha.support
    else:
        alpha = tuple(alpha)
        for a in alpha:
            if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
                raise DomainError(f"exponents must be integers, got {a!r}")
            if a < 0:
                raise DomainError(f"exponents must be nonnegative, got {a}")
        support = [(j, int(a)) for j, a in enumerate(alpha, start=1) if a]
    plist = PRIMES._state[4]
    if support and support[-1][0] > len(plist):
        PRIMES.ensure_count(support[-1][0])
        plist = PRIMES._state[4]
    n = 1
    for j, a in support:
        # 2**64 already overflows, so cap before building a huge int
        if a >= 64:
            n = U64_MAX + 1
            break
        n *= plist[j - 1] ** a
    if n > U64_MAX:
        raise IndexOverflowError("monomial index overflows the unsigned 64-bit range")
    return n


def in_abschnitt(n: int, k: int) -> bool:
    """True iff every prime factor of ``n`` is among the first ``k`` primes."""
    n = _check_index(n)
    k = check_positive_int(k, "k")
    pairs = PRIMES.factor_pairs(n)
    return not pairs or pairs[-1][0] <= k


def weights_up_to(N: int) -> np.ndarray:
    """Array ``w`` with ``w[n]`` the weight of ``n`` for ``0 <= n <= N`` (``w[0]`` unused)."""
    N = check_positive_int(N, "N")
    PRIMES.ensure(N)
    w = np.zeros(N + 1, dtype=np.int64)
    primes = PRIMES.primes(int(np.searchsorted(PRIMES._state[2], N, side="right")))
    for j, p in enumerate(primes.tolist(), start=1):
        q = p
        while q <= N:
            w[q::q] += j
            q *= p
    return w


def _weight_graded(W: int) -> Iterator[tuple[int, int]]:
    """Yield ``(n, weight)`` for every ``n`` of weight at most ``W`` (unordered)."""
    primes = PRIMES.primes(W).tolist() if W > 0 else []
    # stack of (n, weight, smallest prime index allowed next)
    stack = [(1, 0, 1)]
    while stack:
        n, w, j0 = stack.pop()
        yield n, w
        for j in range(j0, W - w + 1):
            stack.append((n * primes[j - 1], w + j, j))


def weight_graded_indices(W: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted ``(n, weight)`` arrays for all ``n`` of weight at most ``W``."""
    W = check_positive_int(W, "W", minimum=0)
    if 2**W > U64_MAX:
        raise IndexOverflowError(f"max_weight {W} produces indices beyond 64 bits")
    pairs = np.array(list(_weight_graded(W)), dtype=np.uint64)
    order = np.argsort(pairs[:, 0], kind="stable")
    pairs = pairs[order]
    return pairs[:, 0], pairs[:, 1].astype(np.int64)


def enumerate_indices(cutoff: TruncationPolicy) -> list[MonomialIndex]:
    """Materialize a truncation as a list of indices in increasing ``n``."""
    cutoff = parse_truncation(cutoff)
    if isinstance(cutoff, MaxIndex):
        return [factorize(n) for n in range(1, cutoff.value + 1)]
    ns, _ = weight_graded_indices(cutoff.value)
    return [factorize(int(n)) for n in ns]
