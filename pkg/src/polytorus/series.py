"""Finite monomial expansions ``F = sum a_n z**alpha(n)`` and exact operations on them."""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping
from functools import cached_property

import numpy as np

from .monomial import (
    PRIMES,
    MaxIndex,
    MaxWeight,
    TruncationPolicy,
    parse_truncation,
    weight_graded_indices,
    weights_up_to,
)
from .validation import ValidationError, check_positive_int, check_radius

__all__ = [
    "CoefficientSeries",
    "DilatedSeries",
    "MonomialBasis",
    "Multiplier",
    "CoefficientBoundReport",
    "dilate",
    "dilation_compose",
    "norm2_exact",
    "partial_sum",
    "multiplier_apply",
    "coeff_bound_check",
    "series_to_json",
    "series_from_json",
]

# Vectorized weight lookup is used when the largest key is below this.
_DENSE_WEIGHT_LIMIT = 1 << 22


def _weights_of(indices: np.ndarray) -> np.ndarray:
    if len(indices) == 0:
        return np.zeros(0, dtype=np.int64)
    top = int(indices[-1])
    if top <= _DENSE_WEIGHT_LIMIT:
        return weights_up_to(top)[indices.astype(np.int64)]
    return np.array(
        [sum(j * e for j, e in PRIMES.factor_pairs(n)) for n in indices.tolist()], dtype=np.int64
    )


class MonomialBasis:
    """Evaluation plan for the monomials ``w**alpha(n)`` of a fixed key set.

    Every key is reached from ``1`` by multiplying in one prime at a time
    (largest prime last), so the monomial values on a block of torus points
    follow from one complex multiply per node and level instead of one
    ``exp`` per key.  Keys occupy rows ``0..K-1``; auxiliary chain nodes
    (present only when the key set is not closed under removing its largest
    prime) come after them.
    """

    def __init__(self, indices):
        keys = [int(n) for n in indices]
        pos = {n: i for i, n in enumerate(keys)}
        nodes = list(keys)
        parent: dict[int, tuple[int, int, int]] = {}
        pending = list(keys)
        while pending:
            n = pending.pop()
            if n == 1 or n in parent:
                continue
            pairs = PRIMES.factor_pairs(n)
            j, _ = pairs[-1]
            m = n // PRIMES.nth_prime(j)
            level = sum(e for _, e in pairs)
            parent[n] = (m, j, level)
            if m not in pos:
                pos[m] = len(nodes)
                nodes.append(m)
                pending.append(m)
        if 1 not in pos:
            pos[1] = len(nodes)
            nodes.append(1)
        self.n_keys = len(keys)
        self.n_nodes = len(nodes)
        self.one = pos[1]
        self.dim = max((j for _, j, _ in parent.values()), default=0)
        by_level: dict[int, list[tuple[int, int, int]]] = {}
        for n, (m, j, level) in parent.items():
            by_level.setdefault(level, []).append((pos[n], pos[m], j - 1))
        self.levels = []
        for level in sorted(by_level):
            rows = np.array(sorted(by_level[level]), dtype=np.intp)
            self.levels.append((rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy()))

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        """Monomial values for keys, shape ``(n_keys, B)``, from coordinates of shape ``(dim, B)``."""
        coords = np.asarray(coords, dtype=complex)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.shape[0] < self.dim:
            raise ValidationError(f"torus points have {coords.shape[0]} coordinates, need {self.dim}")
        V = np.empty((self.n_nodes, coords.shape[1]), dtype=complex)
        V[self.one] = 1.0
        for rows, parents, primes in self.levels:
            V[rows] = V[parents] * coords[primes]
        return V[: self.n_keys]


class CoefficientSeries:
    """Sparse coefficients ``n -> a_n`` of a truncated monomial expansion.

    Immutable.  Zero coefficients are dropped, keys are kept sorted, and the
    key set must be admitted by ``cutoff``.
    """

    def __init__(self, coeffs=None, cutoff: TruncationPolicy | str | None = None, label: str = ""):
        if coeffs is None:
            coeffs = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        pairs = []
        for n, a in items:
            if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
                raise ValidationError(f"series keys must be positive integers, got {n!r}")
            pairs.append((int(n), complex(a)))
        pairs.sort(key=lambda t: t[0])
        idx = np.array([n for n, _ in pairs], dtype=np.uint64)
        val = np.array([a for _, a in pairs], dtype=complex)
        self._init_arrays(idx, val, cutoff, label)

    @classmethod
    def from_arrays(cls, indices, values, cutoff=None, label: str = "") -> "CoefficientSeries":
        idx = np.asarray(indices)
        if idx.size and (idx.dtype.kind not in "iu" or idx.min() < 1):
            raise ValidationError("series keys must be positive integers")
        idx = idx.astype(np.uint64)
        val = np.asarray(values, dtype=complex)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValidationError("indices and values must be 1-d arrays of equal length")
        order = np.argsort(idx, kind="stable")
        obj = cls.__new__(cls)
        obj._init_arrays(idx[order], val[order], cutoff, label)
        return obj

    @classmethod
    def from_function(cls, func: Callable, cutoff, label: str = "") -> "CoefficientSeries":
        """Coefficients ``func(n)`` (vectorized over a uint64 array) on the truncation ``cutoff``."""
        cutoff = parse_truncation(cutoff)
        if isinstance(cutoff, MaxIndex):
            idx = np.arange(1, cutoff.value + 1, dtype=np.uint64)
        else:
            idx, _ = weight_graded_indices(cutoff.value)
        return cls.from_arrays(idx, np.asarray(func(idx), dtype=complex), cutoff, label)

    def _init_arrays(self, idx, val, cutoff, label):
        if len(idx) > 1 and np.any(idx[1:] == idx[:-1]):
            raise ValidationError("duplicate series keys")
        keep = val != 0
        idx, val = idx[keep].copy(), val[keep].copy()
        idx.flags.writeable = False
        val.flags.writeable = False
        self.indices = idx
        self.values = val
        self.label = str(label)
        if cutoff is None:
            cutoff = MaxIndex(int(idx[-1]) if len(idx) else 1)
        self.cutoff = parse_truncation(cutoff)
        if isinstance(self.cutoff, MaxIndex):
            if len(idx) and int(idx[-1]) > self.cutoff.value:
                raise ValidationError(f"key {int(idx[-1])} is not admitted by {self.cutoff}")
        elif len(idx) and int(self.weights.max()) > self.cutoff.value:
            bad = int(idx[int(np.argmax(self.weights))])
            raise ValidationError(f"key {bad} is not admitted by {self.cutoff}")

    @cached_property
    def weights(self) -> np.ndarray:
        w = _weights_of(self.indices)
        w.flags.writeable = False
        return w

    @cached_property
    def basis(self) -> MonomialBasis:
        return MonomialBasis(self.indices.tolist())

    @property
    def dim(self) -> int:
        """Number of torus coordinates the series depends on."""
        return self.basis.dim

    @property
    def coefficients(self) -> dict[int, complex]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, n: int) -> complex:
        i = np.searchsorted(self.indices, np.uint64(n))
        if i < len(self.indices) and int(self.indices[i]) == n:
            return complex(self.values[i])
        return 0j

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientSeries):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self) -> str:
        head = ", ".join(f"{n}: {a:g}" for n, a in list(self.coefficients.items())[:4])
        more = ", ..." if len(self) > 4 else ""
        return f"CoefficientSeries({{{head}{more}}}, cutoff={self.cutoff}, label={self.label!r})"

    def with_values(self, values, label: str | None = None) -> "CoefficientSeries":
        """Same keys and cutoff, new coefficient values (zeros are dropped)."""
        return CoefficientSeries.from_arrays(
            self.indices, values, self.cutoff, self.label if label is None else label
        )

    def __mul__(self, c) -> "CoefficientSeries":
        return self.with_values(self.values * complex(c))

    __rmul__ = __mul__

    def __neg__(self) -> "CoefficientSeries":
        return self.with_values(-self.values)

    def __add__(self, other: "CoefficientSeries") -> "CoefficientSeries":
        if not isinstance(other, CoefficientSeries):
            return NotImplemented
        idx = np.union1d(self.indices, other.indices)
        val = np.zeros(len(idx), dtype=complex)
        val[np.searchsorted(idx, self.indices)] += self.values
        val[np.searchsorted(idx, other.indices)] += other.values
        cutoff = self.cutoff if self.cutoff == other.cutoff else None
        return CoefficientSeries.from_arrays(idx, val, cutoff, self.label or other.label)

    def __sub__(self, other: "CoefficientSeries") -> "CoefficientSeries":
        return self + (-other)


class DilatedSeries:
    """``F_[r]``: coefficients ``a_n * r**weight(n)`` of a base series."""

    def __init__(self, base: CoefficientSeries, r: float):
        self.base = base
        self.r = check_radius(r)

    @cached_property
    def factors(self) -> np.ndarray:
        return np.power(self.r, self.base.weights.astype(float))

    @cached_property
    def values(self) -> np.ndarray:
        v = self.base.values * self.factors
        v.flags.writeable = False
        return v

    @property
    def indices(self) -> np.ndarray:
        return self.base.indices

    @property
    def weights(self) -> np.ndarray:
        return self.base.weights

    @property
    def basis(self) -> MonomialBasis:
        return self.base.basis

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def label(self) -> str:
        return self.base.label

    @property
    def coefficients(self) -> dict[int, complex]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def as_series(self) -> CoefficientSeries:
        label = f"{self.base.label}|dilate({self.r!r})" if self.r != 1.0 else self.base.label
        return CoefficientSeries.from_arrays(self.indices, self.values, self.base.cutoff, label)

    def __repr__(self) -> str:
        return f"DilatedSeries(r={self.r}, base={self.base!r})"


def dilate(F: CoefficientSeries, r: float) -> DilatedSeries:
    """Dilate ``F`` by ``r`` in (0, 1]: coordinate ``j`` is scaled by ``r**j``."""
    if isinstance(F, DilatedSeries):
        F = F.as_series()
    return DilatedSeries(F, r)


def dilation_compose(F: CoefficientSeries, r: float, r2: float, rtol: float = 1e-12) -> bool:
    """Check that dilating by ``r`` then ``r2`` equals dilating once by ``r * r2``.

    Coefficients that underflow to zero on either path count as zero; the
    comparison allows an absolute slack of the smallest normal float.
    """
    twice = dilate(dilate(F, r).as_series(), r2)
    once = dilate(F, check_radius(r) * check_radius(r2)).values
    lookup = dict(zip(twice.indices.tolist(), twice.values.tolist()))
    got = np.array([lookup.get(n, 0j) for n in F.indices.tolist()], dtype=complex)
    tiny = np.finfo(float).tiny
    return bool(np.all(np.abs(got - once) <= rtol * np.abs(once) + tiny))


def norm2_exact(F) -> float:
    """``sqrt(sum |c_n|**2)`` by compensated summation (monomials are orthonormal)."""
    v = F.values
    return math.sqrt(math.fsum((v.real * v.real + v.imag * v.imag).tolist()))


def partial_sum(F: CoefficientSeries, m: int) -> CoefficientSeries:
    """Restriction of ``F`` to the keys ``n <= m``."""
    m = check_positive_int(m, "m")
    if len(F) == 0 or int(F.indices[-1]) <= m:
        return F
    keep = F.indices <= np.uint64(m)
    cutoff = MaxIndex(m) if isinstance(F.cutoff, MaxWeight) else MaxIndex(min(m, F.cutoff.value))
    return CoefficientSeries.from_arrays(F.indices[keep], F.values[keep], cutoff, F.label)


class Multiplier:
    """A coefficient sequence ``n -> lambda_n`` given by a finite map plus an optional default.

    ``values`` may also be a callable taking a uint64 array of indices.
    """

    def __init__(self, values=None, default=None):
        self.values = {} if values is None else values
        self.default = default

    def __call__(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.uint64)
        if callable(self.values):
            return np.asarray(self.values(indices), dtype=complex) * np.ones(len(indices))
        out = np.empty(len(indices), dtype=complex)
        for i, n in enumerate(indices.tolist()):
            if n in self.values:
                out[i] = self.values[n]
            elif self.default is not None:
                out[i] = self.default
            else:
                raise ValidationError(f"multiplier has no value for index {n} and no default")
        return out

    def sup(self, indices) -> float:
        """``max |lambda_n|`` over the given indices."""
        lam = self(indices)
        return float(np.max(np.abs(lam))) if len(lam) else 0.0


def _as_multiplier(lam) -> Multiplier:
    if isinstance(lam, Multiplier):
        return lam
    if isinstance(lam, Mapping) or callable(lam):
        return Multiplier(lam)
    return Multiplier(default=complex(lam))


def multiplier_apply(lam, F: CoefficientSeries) -> CoefficientSeries:
    """Coefficient-wise product ``lambda_n * a_n``."""
    lam = _as_multiplier(lam)
    return F.with_values(lam(F.indices) * F.values)


class CoefficientBoundReport(dict):
    """Plain dict with attribute access, as emitted by :func:`coeff_bound_check`."""

    __getattr__ = dict.__getitem__


def coeff_bound_check(F: CoefficientSeries, estimate, sigmas: float = 3.0) -> CoefficientBoundReport:
    """Compare the largest dilated coefficient with a Monte Carlo p-norm estimate.

    The estimate holds ``||F_[r]||_p**p``; every coefficient of ``F_[r]`` is
    bounded by ``||F_[r]||_p``, so a violation is flagged only when the
    largest ``|a_n r**weight(n)|`` exceeds ``(mean + sigmas*stderr)**(1/p)``.
    """
    if estimate.label != F.label:
        raise ValidationError(
            f"estimate label {estimate.label!r} does not match series label {F.label!r}"
        )
    c = np.abs(dilate(F, estimate.r).values)
    max_coeff = float(c.max()) if len(c) else 0.0
    p = estimate.p
    upper = (estimate.mean + sigmas * estimate.stderr) ** (1.0 / p)
    lower = max(estimate.mean - sigmas * estimate.stderr, 0.0) ** (1.0 / p)
    return CoefficientBoundReport(
        label=F.label,
        p=p,
        r=estimate.r,
        max_coefficient=max_coeff,
        norm_estimate=estimate.mean ** (1.0 / p),
        lower_confidence=lower,
        upper_confidence=upper,
        violation=bool(max_coeff > upper),
    )


def series_to_json(F: CoefficientSeries) -> dict:
    return {
        "label": F.label,
        "cutoff": F.cutoff.to_json(),
        "coeffs": [[n, a.real, a.imag] for n, a in zip(F.indices.tolist(), F.values.tolist())],
    }


def series_from_json(obj) -> CoefficientSeries:
    """Inverse of :func:`series_to_json`; accepts a dict, a JSON string or a file-like object."""
    if hasattr(obj, "read"):
        obj = json.load(obj)
    elif isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    try:
        rows = obj["coeffs"]
        cutoff = parse_truncation(obj["cutoff"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed series JSON: missing {exc}") from None
    ns = [row[0] for row in rows]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("series JSON keys must be strictly increasing")
    vals = [complex(row[1], row[2]) for row in rows]
    for n in ns:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ValidationError(f"series keys must be positive integers, got {n!r}")
    idx = np.array(ns, dtype=np.uint64)
    return CoefficientSeries.from_arrays(idx, np.array(vals, dtype=complex), cutoff, obj.get("label", ""))
