"""scikit-learn style wrappers around the functional API.

Inputs are coefficient series rather than feature matrices, so ``X`` is a
single series or a list of them.  Parameters are plain constructor
arguments, which makes ``get_params``/``set_params``/``clone`` work.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dirichlet import DirichletPolynomial, bohr_inverse, bohr_lift
from .randomizer import RandomModel, draw, randomize, randomized_moment, second_moment
from .rng import SeedStreams
from .series import CoefficientSeries, DilatedSeries, dilate, series_from_json
from .torus import mc_norm, norm_profile
from .validation import ValidationError

__all__ = [
    "check_series",
    "check_series_list",
    "Dilation",
    "BohrLift",
    "Randomizer",
    "TorusNormEstimator",
    "NormProfileEstimator",
    "RandomizedMomentEstimator",
]


def check_series(F) -> CoefficientSeries:
    """Coerce a series-like object (series, dilated series, mapping or series JSON) to a series."""
    if isinstance(F, CoefficientSeries):
        return F
    if isinstance(F, DilatedSeries):
        return F.as_series()
    if isinstance(F, Mapping):
        if "coeffs" in F:
            return series_from_json(F)
        return CoefficientSeries(F)
    raise ValidationError(f"expected a coefficient series, got {type(F).__name__}")


def check_series_list(X) -> list[CoefficientSeries]:
    if isinstance(X, (CoefficientSeries, DilatedSeries, Mapping)):
        return [check_series(X)]
    return [check_series(F) for F in X]


def _model(model) -> RandomModel:
    return model if isinstance(model, RandomModel) else RandomModel.from_json(model)


class Dilation(TransformerMixin, BaseEstimator):
    """Stateless transformer ``F -> F_[r]`` with coefficients ``a_n r**weight(n)``."""

    def __init__(self, r: float = 0.9):
        self.r = r

    def fit(self, X=None, y=None):
        dilate(CoefficientSeries({1: 1.0}), self.r)
        return self

    def transform(self, X):
        return [dilate(F, self.r).as_series() for F in check_series_list(X)]


class BohrLift(TransformerMixin, BaseEstimator):
    """Dirichlet polynomials to torus series; ``inverse_transform`` goes back."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        if isinstance(X, DirichletPolynomial):
            X = [X]
        return [bohr_lift(Q) for Q in X]

    def inverse_transform(self, X):
        return [bohr_inverse(F) for F in check_series_list(X)]


class Randomizer(TransformerMixin, BaseEstimator):
    """Draws one realization in ``fit`` (long enough for every series seen) and applies it in ``transform``."""

    def __init__(self, model="bernoulli", seed: int = 0, index: int = 0):
        self.model = model
        self.seed = seed
        self.index = index

    def fit(self, X, y=None):
        series = check_series_list(X)
        N = max((int(F.indices[-1]) for F in series if len(F)), default=1)
        self.realization_ = draw(_model(self.model), N, SeedStreams(self.seed).spawn("realization"), self.index)
        return self

    def transform(self, X):
        check_is_fitted(self, "realization_")
        return [randomize(F, self.realization_) for F in check_series_list(X)]


class TorusNormEstimator(TransformerMixin, BaseEstimator):
    """Monte Carlo ``||F_[r]||_p**p``; ``fit`` on one series, ``transform`` returns ``(mean, stderr)`` rows."""

    def __init__(self, p: float = 2.0, r: float = 1.0, samples: int = 10_000, seed: int = 0):
        self.p = p
        self.r = r
        self.samples = samples
        self.seed = seed

    def _estimate(self, F):
        return mc_norm(F, self.p, self.r, self.samples, SeedStreams(self.seed))

    def fit(self, X, y=None):
        series = check_series_list(X)
        if len(series) != 1:
            raise ValidationError("fit takes exactly one series")
        self.estimate_ = self._estimate(series[0])
        self.mean_ = self.estimate_.mean
        self.stderr_ = self.estimate_.stderr
        self.norm_ = self.estimate_.norm
        return self

    def transform(self, X):
        est = [self._estimate(F) for F in check_series_list(X)]
        return np.array([[e.mean, e.stderr] for e in est])


class NormProfileEstimator(TransformerMixin, BaseEstimator):
    """``||F_[r]||_p**p`` over a radius ladder with common random numbers."""

    def __init__(self, p: float = 2.0, ladder=(0.5, 0.7, 0.9, 0.95, 0.99), samples: int = 10_000, seed: int = 0):
        self.p = p
        self.ladder = ladder
        self.samples = samples
        self.seed = seed

    def fit(self, X, y=None):
        series = check_series_list(X)
        if len(series) != 1:
            raise ValidationError("fit takes exactly one series")
        self.profile_ = norm_profile(series[0], self.p, self.ladder, self.samples, SeedStreams(self.seed))
        return self

    def transform(self, X):
        rows = [norm_profile(F, self.p, self.ladder, self.samples, SeedStreams(self.seed)) for F in check_series_list(X)]
        return np.array([[e.mean for e in row] for row in rows])


class RandomizedMomentEstimator(BaseEstimator):
    """Nested Monte Carlo ``E ||(R F)_[r]||_p**p`` with the exact p = 2 value alongside."""

    def __init__(self, model="bernoulli", p: float = 2.0, r: float = 0.9, outer: int = 200, inner: int = 2000, seed: int = 0):
        self.model = model
        self.p = p
        self.r = r
        self.outer = outer
        self.inner = inner
        self.seed = seed

    def fit(self, X, y=None):
        series = check_series_list(X)
        if len(series) != 1:
            raise ValidationError("fit takes exactly one series")
        F, model = series[0], _model(self.model)
        self.estimate_ = randomized_moment(F, model, self.p, self.r, self.outer, self.inner, SeedStreams(self.seed))
        self.mean_ = self.estimate_.mean
        self.stderr_ = self.estimate_.stderr
        self.second_moment_ = second_moment(F, model, self.r)
        return self
