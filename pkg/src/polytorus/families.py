"""Built-in coefficient families, each tagged by square-summability.

The tag is backed by a certificate: for square-summable families an exact
partial sum of ``|a_n|**2`` plus an integral-test bound on the tail, for the
others a lower bound on the partial sums that grows without limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .monomial import PRIMES, MaxIndex, parse_truncation
from .series import CoefficientSeries
from .validation import ValidationError, check_positive_int

__all__ = ["Family", "FAMILIES", "get_family", "family_series", "membership_certificate"]


def _prime_scaled(n: np.ndarray) -> np.ndarray:
    # a_{p_k} = 1 / (sqrt(p_k) k), zero off the primes
    n = np.asarray(n, dtype=np.uint64)
    k = PRIMES.prime_indices(n)
    out = np.zeros(len(n))
    hit = k > 0
    out[hit] = 1.0 / (np.sqrt(n[hit].astype(float)) * k[hit])
    return out


@dataclass(frozen=True)
class Family:
    name: str
    square_summable: bool
    coefficient: Callable[[np.ndarray], np.ndarray]
    formula: str
    # (N, partial sum of |a_n|^2 over n <= N) -> certificate fields
    bound: Callable[[int, float], dict]


def _tail_inverse_square(N: int, partial: float) -> dict:
    # sum_{n>N} 1/n^2 <= int_N^inf dx/x^2 = 1/N
    return {"tail_upper": 1.0 / N, "total_upper": partial + 1.0 / N}


def _tail_n_log(N: int, partial: float) -> dict:
    # 1/(x log(x+1))^2 <= 1/(x log x)^2, and int_N^inf dx/(x log x)^2 <= 1/(N log(N)^2)
    if N < 2:
        raise ValidationError("certificate for 1/(n log(n+1)) needs N >= 2")
    tail = 1.0 / (N * math.log(N) ** 2)
    return {"tail_upper": tail, "total_upper": partial + tail}


def _tail_prime_scaled(N: int, partial: float) -> dict:
    # remaining terms are 1/(p_k k^2) with k > K = pi(N), p_k >= k, so the tail is <= sum_{k>K} k^-3 <= 1/(2K^2)
    K = int(np.count_nonzero(PRIMES.prime_indices(np.arange(1, N + 1))))
    tail = 1.0 / (2 * K * K) if K else 1.0
    return {"tail_upper": tail, "total_upper": partial + tail}


def _growth_harmonic(N: int, partial: float) -> dict:
    # sum_{n<=N} 1/n >= int_1^{N+1} dx/x = log(N+1), unbounded in N
    return {"lower_bound": math.log(N + 1), "total_upper": None}


FAMILIES: dict[str, Family] = {
    "square_summable": Family(
        "square_summable", True, lambda n: 1.0 / np.asarray(n, dtype=float), "1/n", _tail_inverse_square
    ),
    "non_square_summable": Family(
        "non_square_summable", False, lambda n: 1.0 / np.sqrt(np.asarray(n, dtype=float)), "1/sqrt(n)", _growth_harmonic
    ),
    "n_log": Family(
        "n_log",
        True,
        lambda n: 1.0 / (np.asarray(n, dtype=float) * np.log(np.asarray(n, dtype=float) + 1.0)),
        "1/(n log(n+1))",
        _tail_n_log,
    ),
    "prime_scaled": Family("prime_scaled", True, _prime_scaled, "1/(sqrt(p_k) k) at n = p_k", _tail_prime_scaled),
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValidationError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None


def family_series(name: str, cutoff) -> CoefficientSeries:
    """The family truncated to ``cutoff`` (``max_index:N`` or ``max_weight:W``)."""
    fam = get_family(name)
    return CoefficientSeries.from_function(fam.coefficient, parse_truncation(cutoff), label=name)


def membership_certificate(name: str, N: int) -> dict:
    """Evidence for the square-summability tag from the first ``N`` coefficients."""
    fam = get_family(name)
    N = check_positive_int(N, "N")
    a = family_series(name, MaxIndex(N)).values
    partial = math.fsum((np.abs(a) ** 2).tolist())
    cert = {"family": name, "N": N, "square_summable": fam.square_summable, "partial_sum": partial}
    cert.update(fam.bound(N, partial))
    return cert
