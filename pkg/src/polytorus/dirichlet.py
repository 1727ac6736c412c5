"""Dirichlet polynomials, time averages on the imaginary axis, and the Bohr lift.

The lift keeps the coefficient map ``n -> a_n`` and swaps the basis:
``n**(-s)`` becomes the torus monomial ``w**alpha(n)``.  Because the
logarithms of the primes are rationally independent, the time average of
``|Q(it)|**p`` equals the torus mean of ``|lift(Q)|**p``; here that is
checked numerically with a trapezoid rule on ``[-T, T]``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass

import numpy as np

from .randomizer import Realization
from .series import CoefficientSeries
from .torus import mc_norm
from .validation import ValidationError, check_exponent

__all__ = [
    "DirichletPolynomial",
    "QuadratureReport",
    "IsometryReport",
    "evaluate_dirichlet",
    "vertical_translate",
    "time_shift",
    "randomize_dirichlet",
    "bohr_lift",
    "bohr_inverse",
    "max_step",
    "besicovitch_norm",
    "isometry_check",
]

_LIFT_PREFIX = "bohr:"
# Points per panel when evaluating Q on the quadrature grid.
_PANEL = 4096


class DirichletPolynomial:
    """Finite sum ``sum a_n n**(-s)``; immutable, zero terms dropped."""

    def __init__(self, terms=None, label: str = ""):
        if terms is None:
            terms = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        pairs = {}
        for n, a in items:
            if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
                raise ValidationError(f"Dirichlet keys must be positive integers, got {n!r}")
            if int(n) in pairs:
                raise ValidationError(f"duplicate Dirichlet key {int(n)}")
            pairs[int(n)] = complex(a)
        self._set(sorted(pairs), [pairs[n] for n in sorted(pairs)], label)

    @classmethod
    def from_arrays(cls, indices, values, label: str = "") -> "DirichletPolynomial":
        return cls(zip(np.asarray(indices).tolist(), np.asarray(values, dtype=complex).tolist()), label)

    def _set(self, ns, vals, label):
        keep = [i for i, a in enumerate(vals) if a != 0]
        idx = np.array([ns[i] for i in keep], dtype=np.uint64)
        val = np.array([vals[i] for i in keep], dtype=complex)
        idx.flags.writeable = False
        val.flags.writeable = False
        self.indices = idx
        self.values = val
        self.label = str(label)

    @property
    def logs(self) -> np.ndarray:
        return np.array([math.log(n) for n in self.indices.tolist()])

    @property
    def terms(self) -> dict[int, complex]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, n: int) -> complex:
        return self.terms.get(int(n), 0j)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirichletPolynomial):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self) -> str:
        return f"DirichletPolynomial({self.terms!r})"

    def __add__(self, other: "DirichletPolynomial") -> "DirichletPolynomial":
        if not isinstance(other, DirichletPolynomial):
            return NotImplemented
        total = self.terms
        for n, a in other.terms.items():
            total[n] = total.get(n, 0j) + a
        return DirichletPolynomial(total, self.label)

    def __mul__(self, c) -> "DirichletPolynomial":
        if not isinstance(c, (int, float, complex, np.number)):
            return NotImplemented
        return DirichletPolynomial.from_arrays(self.indices, self.values * complex(c), self.label)

    __rmul__ = __mul__

    def __neg__(self) -> "DirichletPolynomial":
        return self * -1

    def __sub__(self, other: "DirichletPolynomial") -> "DirichletPolynomial":
        return self + (-other)

    def to_json(self) -> dict:
        return {"terms": [[n, a.real, a.imag] for n, a in zip(self.indices.tolist(), self.values.tolist())]}

    @classmethod
    def from_json(cls, obj) -> "DirichletPolynomial":
        if hasattr(obj, "read"):
            obj = json.load(obj)
        elif isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "terms" not in obj:
            raise ValidationError("Dirichlet JSON must be an object with a 'terms' list")
        try:
            return cls([(row[0], complex(row[1], row[2])) for row in obj["terms"]])
        except (IndexError, TypeError) as exc:
            raise ValidationError(f"malformed Dirichlet term: {exc}") from None


def _values_on(Q: DirichletPolynomial, s) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    if len(Q) == 0:
        return np.zeros(s.shape, dtype=complex)
    return np.exp(-np.multiply.outer(s, Q.logs)) @ Q.values


def evaluate_dirichlet(Q: DirichletPolynomial, s):
    """``sum a_n exp(-s log n)``; ``s`` may be a scalar or an array."""
    out = _values_on(Q, s)
    return complex(out) if out.ndim == 0 else out


def vertical_translate(Q: DirichletPolynomial, sigma: float) -> DirichletPolynomial:
    """Coefficients ``a_n n**(-sigma)``, i.e. ``s -> Q(s + sigma)``."""
    sigma = float(sigma)
    if not math.isfinite(sigma):
        raise ValidationError("sigma must be finite")
    return DirichletPolynomial.from_arrays(Q.indices, Q.values * np.exp(-sigma * Q.logs), Q.label)


def time_shift(Q: DirichletPolynomial, t0: float) -> DirichletPolynomial:
    """Coefficients ``a_n n**(-i t0)``, i.e. ``s -> Q(s + i t0)``."""
    return DirichletPolynomial.from_arrays(Q.indices, Q.values * np.exp(-1j * float(t0) * Q.logs), Q.label)


def randomize_dirichlet(Q: DirichletPolynomial, X: Realization) -> DirichletPolynomial:
    return DirichletPolynomial.from_arrays(Q.indices, Q.values * X.at(Q.indices), Q.label)


def bohr_lift(Q: DirichletPolynomial) -> CoefficientSeries:
    """The same coefficient map read as a torus series ``sum a_n w**alpha(n)``."""
    return CoefficientSeries.from_arrays(Q.indices, Q.values, label=_LIFT_PREFIX + Q.label)


def bohr_inverse(F: CoefficientSeries) -> DirichletPolynomial:
    label = F.label[len(_LIFT_PREFIX):] if F.label.startswith(_LIFT_PREFIX) else F.label
    return DirichletPolynomial.from_arrays(F.indices, F.values, label)


def max_step(Q: DirichletPolynomial) -> float:
    """Largest admissible grid step: ten points per period of the fastest term, capped at 0.1."""
    top = int(Q.indices[-1]) if len(Q) else 1
    return 0.1 if top <= 1 else min(0.1, math.pi / (5.0 * math.log(top)))


@dataclass(frozen=True)
class QuadratureReport:
    """Trapezoid estimate of the time average ``(1/2T) int_{-T}^{T} |Q(it)|**p dt``."""

    p: float
    T: float
    step: float
    nodes: int
    power_mean: float
    ladder: tuple[float, float, float]
    diagnostic: float

    @property
    def norm(self) -> float:
        return self.power_mean ** (1.0 / self.p)

    def to_json(self) -> dict:
        out = asdict(self)
        out["ladder"] = list(self.ladder)
        out["norm"] = self.norm
        return out


def _trapezoid_mean(Q: DirichletPolynomial, p: float, T: float, step: float) -> tuple[float, int]:
    M = max(2, math.ceil(2.0 * T / step))
    h = 2.0 * T / M
    partial = []
    for lo in range(0, M + 1, _PANEL):
        i = np.arange(lo, min(M + 1, lo + _PANEL))
        t = -T + i * h
        v = np.abs(_values_on(Q, 1j * t)) ** p
        wts = np.ones(len(i))
        wts[i == 0] = 0.5
        wts[i == M] = 0.5
        partial.append(math.fsum((wts * v).tolist()))
    return h * math.fsum(partial) / (2.0 * T), M + 1


def besicovitch_norm(Q: DirichletPolynomial, p: float, T: float, step: float | None = None) -> QuadratureReport:
    """Composite trapezoid time average of ``|Q(it)|**p`` over ``[-T, T]``.

    ``diagnostic`` is the spread of the same average at ``T``, ``T/2`` and
    ``T/4``; it stands in for the unknown almost-periodic convergence error.
    """
    p = check_exponent(p)
    T = float(T)
    if not T >= 10.0:
        raise ValidationError(f"T must be at least 10, got {T}")
    limit = max_step(Q)
    if step is None:
        step = limit
    step = float(step)
    if not 0.0 < step <= limit * (1 + 1e-12):
        raise ValidationError(f"step must lie in (0, {limit:.6g}], got {step}")
    means = []
    nodes = 0
    for scale in (1.0, 0.5, 0.25):
        m, k = _trapezoid_mean(Q, p, T * scale, step)
        means.append(m)
        nodes = nodes or k
    return QuadratureReport(p, T, step, nodes, means[0], tuple(means), max(means) - min(means))


@dataclass(frozen=True)
class IsometryReport:
    p: float
    T: float
    time_average: float
    torus_mean: float
    torus_stderr: float
    diagnostic: float
    samples: int
    seed: int

    @property
    def difference(self) -> float:
        return self.time_average - self.torus_mean

    @property
    def tolerance(self) -> float:
        scale = max(abs(self.time_average), abs(self.torus_mean), 1.0)
        return self.diagnostic + 3.0 * self.torus_stderr + 1e-12 * scale

    @property
    def passed(self) -> bool:
        return abs(self.difference) <= self.tolerance

    def to_json(self) -> dict:
        out = asdict(self)
        out.update(difference=self.difference, tolerance=self.tolerance, passed=self.passed)
        return out


def isometry_check(
    Q: DirichletPolynomial, p: float, T: float, samples: int = 10_000, rng=None, step: float | None = None
) -> IsometryReport:
    """Time average of ``|Q(it)|**p`` against the torus mean of its lift (no dilation)."""
    quad = besicovitch_norm(Q, p, T, step)
    est = mc_norm(bohr_lift(Q), quad.p, 1.0, samples, rng)
    return IsometryReport(quad.p, quad.T, quad.power_mean, est.mean, est.stderr, quad.diagnostic, est.samples, est.seed)
