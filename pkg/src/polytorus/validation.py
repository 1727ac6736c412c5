"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import math
import numbers

import numpy as np

__all__ = [
    "DomainError",
    "ValidationError",
    "IndexOverflowError",
    "check_positive_int",
    "check_radius",
    "check_exponent",
    "check_samples",
    "check_ladder",
    "check_probability_margin",
]

U64_MAX = 2**64 - 1


class ValidationError(ValueError):
    """A parameter or input object failed validation."""


class DomainError(ValidationError):
    """A value lies outside the mathematical domain of an operation."""


class IndexOverflowError(OverflowError):
    """An integer result left the unsigned 64-bit range."""


def check_positive_int(value, name: str = "value", *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_radius(r, *, allow_one: bool = True) -> float:
    """Return ``r`` as a float after checking it is a valid dilation radius."""
    try:
        r = float(r)
    except (TypeError, ValueError):
        raise DomainError(f"dilation radius must be a real number, got {r!r}") from None
    upper_ok = r <= 1.0 if allow_one else r < 1.0
    if not (math.isfinite(r) and r > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"dilation radius must lie in {bound}, got {r}")
    return r


def check_exponent(p) -> float:
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ValidationError(f"exponent p must be a real number, got {p!r}") from None
    if not (math.isfinite(p) and p >= 1.0):
        raise ValidationError(f"exponent p must satisfy 1 <= p < inf, got {p}")
    return p


def check_samples(samples, name: str = "samples") -> int:
    return check_positive_int(samples, name, minimum=2)


def check_ladder(ladder) -> tuple[float, ...]:
    """Validate a strictly increasing sequence of radii in (0, 1]."""
    rs = tuple(check_radius(r) for r in np.atleast_1d(np.asarray(ladder, dtype=float)))
    if not rs:
        raise ValidationError("r-ladder must contain at least one radius")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValidationError(f"r-ladder must be strictly increasing, got {rs}")
    return rs


def check_probability_margin(margin) -> float:
    margin = float(margin)
    if not (0.0 <= margin < 1.0):
        raise ValidationError(f"margin must lie in [0, 1), got {margin}")
    return margin
