"""Root test graded by monomial weight, and the weight-sum product identity.

For ``0 < beta < 1`` the number of ``n`` with weight ``w`` is the number of
partitions of ``w``, so ``sum_n beta**weight(n)`` equals Euler's product
``prod_j 1/(1 - beta**j)``.  That is what makes ``limsup x_n**(1/weight(n)) < 1``
sufficient for convergence of ``sum x_n``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .monomial import weight_graded_indices, weights_up_to, PRIMES
from .validation import ValidationError, check_positive_int, check_probability_margin

__all__ = [
    "CONVERGES",
    "DIVERGES",
    "INCONCLUSIVE",
    "RootTestReport",
    "WeightSumReport",
    "root_test",
    "euler_product",
    "geometric_weight_sum",
]

CONVERGES = "converges"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RootTestReport:
    gamma_estimate: float
    verdict: str
    window: tuple[int, int]
    margin: float
    terms: int

    def to_json(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out


def _weights_for(ns: np.ndarray) -> np.ndarray:
    top = int(ns.max())
    if top <= 1 << 22:
        return weights_up_to(top)[ns.astype(np.int64)]
    return np.array([sum(j * e for j, e in PRIMES.factor_pairs(n)) for n in ns.tolist()])


def root_test(x, indices=None, margin: float = 0.05) -> RootTestReport:
    """Finite-window root test with exponent ``1/weight(n)``.

    ``x`` is a mapping ``n -> x_n`` or an array of values for ``indices``.
    ``gamma_estimate`` is the largest ``x_n**(1/weight(n))`` over the
    trailing half (by ``n``) of the window; the verdict is ``converges``
    below ``1 - margin``, ``diverges`` above ``1 + margin``, else
    ``inconclusive``.
    """
    margin = check_probability_margin(margin)
    if indices is None:
        if not hasattr(x, "items"):
            raise ValidationError("pass a mapping n -> x_n, or values together with indices")
        items = sorted(x.items())
        ns = np.array([n for n, _ in items], dtype=np.uint64)
        xs = np.array([v for _, v in items], dtype=float)
    else:
        ns = np.asarray(indices, dtype=np.uint64)
        xs = np.asarray(x, dtype=float)
        order = np.argsort(ns, kind="stable")
        ns, xs = ns[order], xs[order]
    if len(ns) == 0:
        raise ValidationError("root test needs a nonempty window")
    if np.any(ns < 1):
        raise ValidationError("indices must be positive")
    if np.any(ns == 1):
        raise ValidationError("window must exclude n = 1 (weight 0)")
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise ValidationError("root test entries must be finite and nonnegative")
    tail = slice(len(ns) // 2, None)
    w = _weights_for(ns[tail])
    gamma = float(np.max(xs[tail] ** (1.0 / w)))
    if gamma < 1.0 - margin:
        verdict = CONVERGES
    elif gamma > 1.0 + margin:
        verdict = DIVERGES
    else:
        verdict = INCONCLUSIVE
    return RootTestReport(gamma, verdict, (int(ns[0]), int(ns[-1])), margin, int(len(ns)))


def _log_euler(beta: float, rtol: float = 1e-13) -> tuple[float, int]:
    """``log prod_{j<=J} 1/(1-beta**j)`` with ``J`` large enough for relative error ``rtol``."""
    terms = []
    j = 0
    while True:
        j += 1
        b = beta**j
        terms.append(-math.log1p(-b))
        # remaining log-sum is below b*beta/((1-beta)(1-b*beta))
        if b * beta / ((1.0 - beta) * (1.0 - b * beta)) < rtol:
            return math.fsum(terms), j


def euler_product(beta: float, rtol: float = 1e-13) -> float:
    """``prod_{j>=1} 1/(1 - beta**j)`` to relative accuracy about ``rtol``."""
    if not 0.0 <= beta < 1.0:
        raise ValidationError(f"beta must lie in [0, 1), got {beta}")
    if beta == 0.0:
        return 1.0
    return math.exp(_log_euler(beta, rtol)[0])


@dataclass(frozen=True)
class WeightSumReport:
    beta: float
    max_weight: int
    lhs: float
    rhs: float
    tail_bound: float
    product_terms: int
    enumerated: int

    @property
    def agrees(self) -> bool:
        return abs(self.lhs - self.rhs) <= self.tail_bound + 1e-10

    def to_json(self) -> dict:
        out = asdict(self)
        out["difference"] = self.rhs - self.lhs
        out["agrees"] = self.agrees
        return out


def _tail_bound(beta: float, W: int) -> float:
    """Bound on ``sum_{weight(n) > W} beta**weight(n)``.

    For any ``beta < t < 1``, each term ``beta**w`` with ``w > W`` is at most
    ``(beta/t)**(W+1) t**w``, so the tail is at most
    ``(beta/t)**(W+1) * prod 1/(1-t**j)``.  Minimized over a grid of ``t``.
    """
    best = math.inf
    for t in np.linspace(beta, 1.0, 402)[1:-1]:
        log_val = (W + 1) * math.log(beta / t) + _log_euler(float(t), 1e-10)[0]
        best = min(best, log_val)
    return math.exp(best)


def geometric_weight_sum(beta: float, W: int) -> WeightSumReport:
    """Compare ``sum_{weight(n) <= W} beta**weight(n)`` (by enumeration) with Euler's product."""
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"beta must lie in (0, 1), got {beta}")
    W = check_positive_int(W, "W")
    _, weights = weight_graded_indices(W)
    counts = np.bincount(weights, minlength=W + 1)
    lhs = math.fsum(int(c) * beta**w for w, c in enumerate(counts.tolist()))
    log_rhs, J = _log_euler(beta)
    return WeightSumReport(beta, W, lhs, math.exp(log_rhs), _tail_bound(beta, W), J, int(len(weights)))
