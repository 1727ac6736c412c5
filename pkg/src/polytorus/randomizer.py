"""Random coefficient models and randomized-norm moments.

A randomization multiplies the coefficient ``a_n`` of a series by ``X_n``
where ``X`` is a standard Bernoulli, Steinhaus or Gaussian sequence, or a
finite-dimensional Gaussian process given by a mean vector and a covariance
matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .monomial import weights_up_to
from .rng import SeedStreams, as_streams
from .series import CoefficientSeries, dilate, norm2_exact
from .torus import sample_values, summarize, pth_power
from .validation import (
    ValidationError,
    check_exponent,
    check_positive_int,
    check_radius,
    check_samples,
)

__all__ = [
    "KINDS",
    "RandomModel",
    "Realization",
    "MomentEstimate",
    "OperatorNormReport",
    "covariance_factor",
    "draw",
    "randomize",
    "second_moment",
    "randomized_moment",
    "randomized_moments",
    "operator_norm_estimate",
    "root_limit_diagnostic",
    "gaussian_tail_bound",
]

log = logging.getLogger(__name__)

KINDS = ("bernoulli", "steinhaus", "gaussian_iid", "gaussian_process")
MAX_COVARIANCE_DIM = 2000
_STREAM_OF = {
    "bernoulli": "bernoulli",
    "steinhaus": "steinhaus",
    "gaussian_iid": "gaussian",
    "gaussian_process": "gaussian",
}


def _psd_cholesky(K: np.ndarray, tol: float) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == K`` for a PSD ``K``, zero pivots allowed."""
    n = K.shape[0]
    L = np.zeros_like(K)
    for j in range(n):
        d = K[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol:
            continue
        L[j, j] = math.sqrt(d)
        L[j + 1 :, j] = (K[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def covariance_factor(K) -> np.ndarray:
    """Lower-triangular factor ``L`` of a covariance matrix, ``L @ L.T ~= K``.

    Eigenvalues in ``[-1e-10 * ||K||, 0)`` are clipped to zero (with a logged
    warning) and rank-deficient matrices get a factor with zero columns.

    Raises
    ------
    ValidationError
        If ``K`` is not square, not symmetric within ``1e-10`` relative, too
        large, or has an eigenvalue below ``-1e-10 * ||K||``.
    """
    K = np.array(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError(f"covariance must be a square matrix, got shape {K.shape}")
    n = K.shape[0]
    if n > MAX_COVARIANCE_DIM:
        raise ValidationError(f"covariance dimension {n} exceeds the supported {MAX_COVARIANCE_DIM}")
    scale = float(np.max(np.abs(K))) if K.size else 0.0
    if scale == 0.0:
        return np.zeros_like(K)
    if np.max(np.abs(K - K.T)) > 1e-10 * scale:
        raise ValidationError("covariance matrix is not symmetric")
    K = 0.5 * (K + K.T)
    eig, vec = np.linalg.eigh(K)
    norm = float(np.max(np.abs(eig)))
    if eig[0] < -1e-10 * norm:
        raise ValidationError(
            f"covariance matrix is not positive semidefinite (eigenvalue {eig[0]:.3e})"
        )
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        pass
    if eig[0] < 0:
        log.warning("clipping covariance eigenvalues down to %.3e to zero", eig[0])
        K = (vec * np.clip(eig, 0.0, None)) @ vec.T
        K = 0.5 * (K + K.T)
    return _psd_cholesky(K, tol=1e-12 * norm)


@dataclass(frozen=True, eq=False)
class RandomModel:
    """Distribution of the multipliers ``X_1, X_2, ...``.

    Use the constructors :meth:`bernoulli`, :meth:`steinhaus`,
    :meth:`gaussian_iid` and :meth:`gaussian_process`, or :meth:`from_json`.
    """

    kind: str
    mean: np.ndarray | None = None
    covariance: np.ndarray | None = None
    factor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "gaussian_process":
            if self.mean is not None or self.covariance is not None:
                raise ValidationError(f"{self.kind} model takes no mean or covariance")
            return
        if self.covariance is None:
            raise ValidationError("gaussian_process model needs a covariance matrix")
        K = np.array(self.covariance, dtype=float)
        mu = np.zeros(K.shape[0]) if self.mean is None else np.array(self.mean, dtype=float).reshape(-1)
        if K.ndim != 2 or mu.shape[0] != K.shape[0]:
            raise ValidationError("mean vector and covariance matrix sizes do not match")
        L = covariance_factor(K)
        for arr in (K, mu, L):
            arr.flags.writeable = False
        object.__setattr__(self, "covariance", K)
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "factor", L)

    @classmethod
    def bernoulli(cls) -> "RandomModel":
        return cls("bernoulli")

    @classmethod
    def steinhaus(cls) -> "RandomModel":
        return cls("steinhaus")

    @classmethod
    def gaussian_iid(cls) -> "RandomModel":
        return cls("gaussian_iid")

    @classmethod
    def gaussian_process(cls, covariance, mean=None) -> "RandomModel":
        return cls("gaussian_process", mean=mean, covariance=covariance)

    @property
    def dimension(self) -> int | None:
        """Largest realization length, or ``None`` when unbounded."""
        return None if self.covariance is None else self.covariance.shape[0]

    @property
    def centered(self) -> bool:
        return self.mean is None or not np.any(self.mean)

    def centered_part(self) -> "RandomModel":
        """The same model with its mean removed."""
        if self.kind != "gaussian_process":
            return self
        return RandomModel.gaussian_process(self.covariance)

    def second_moments(self, N: int) -> np.ndarray:
        """``E|X_n|**2`` for ``n = 1..N``."""
        if self.kind != "gaussian_process":
            return np.ones(N)
        self._check_length(N)
        return self.mean[:N] ** 2 + np.diag(self.covariance)[:N]

    def _check_length(self, N: int) -> None:
        if self.dimension is not None and N > self.dimension:
            raise ValidationError(
                f"realization length {N} exceeds the process dimension {self.dimension}"
            )

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "gaussian_process":
            out["mean"] = self.mean.tolist()
            K = self.covariance
            if np.array_equal(K, np.diag(np.diag(K))):
                out["covariance"] = {"diag": np.diag(K).tolist()}
            else:
                out["covariance"] = K.tolist()
        return out

    @classmethod
    def from_json(cls, obj) -> "RandomModel":
        if isinstance(obj, str):
            return cls(obj)
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("model configuration must be an object with a 'kind' field")
        kind = obj["kind"]
        if kind != "gaussian_process":
            return cls(kind)
        cov = obj.get("covariance")
        if isinstance(cov, dict):
            if "diag" not in cov:
                raise ValidationError("covariance object must have a 'diag' field")
            cov = np.diag(np.asarray(cov["diag"], dtype=float))
        return cls.gaussian_process(cov, obj.get("mean"))


@dataclass(frozen=True, eq=False)
class Realization:
    """One draw ``X_1..X_N``; ``values[n-1]`` is ``X_n``."""

    values: np.ndarray
    model: RandomModel
    seed: int | None = None
    index: int = 0

    def __len__(self) -> int:
        return len(self.values)

    def __neg__(self) -> "Realization":
        return Realization(-self.values, self.model, self.seed, self.index)

    def at(self, indices) -> np.ndarray:
        """``X_n`` for each ``n`` in ``indices``."""
        idx = np.asarray(indices, dtype=np.int64)
        if len(idx) and int(idx.max()) > len(self.values):
            bad = int(idx[idx > len(self.values)][0])
            raise ValidationError(f"realization of length {len(self.values)} does not cover index {bad}")
        return self.values[idx - 1]


def draw(model: RandomModel, N: int, rng, index: int = 0) -> Realization:
    """Draw ``X_1..X_N`` from ``model`` using substream ``index`` of the model's stream."""
    N = check_positive_int(N, "N")
    model._check_length(N)
    streams = as_streams(rng)
    gen = streams.generator(_STREAM_OF[model.kind], index)
    if model.kind == "bernoulli":
        values = np.where(gen.random(N) < 0.5, -1.0, 1.0)
    elif model.kind == "steinhaus":
        values = np.exp(2j * np.pi * gen.random(N))
    elif model.kind == "gaussian_iid":
        values = gen.standard_normal(N)
    else:
        z = gen.standard_normal(N)
        values = model.mean[:N] + model.factor[:N, :N] @ z
    values.flags.writeable = False
    return Realization(values, model, streams.seed, index)


def randomize(F: CoefficientSeries, X: Realization) -> CoefficientSeries:
    """Coefficient-wise product ``a_n * X_n``."""
    return F.with_values(F.values * X.at(F.indices))


def second_moment(F: CoefficientSeries, model: RandomModel, r: float = 1.0) -> float:
    """Exact ``E ||(R F)_[r]||_2**2 = sum |a_n|**2 E|X_n|**2 r**(2 weight(n))``.

    Cross terms vanish after integrating over the torus because distinct
    monomials are orthogonal, so correlations in ``X`` do not enter.
    """
    r = check_radius(r)
    if len(F) == 0:
        return 0.0
    m2 = model.second_moments(int(F.indices[-1]))[F.indices.astype(np.int64) - 1]
    c = np.abs(dilate(F, r).values) ** 2
    return math.fsum((c * m2).tolist())


@dataclass(frozen=True)
class MomentEstimate:
    """Nested Monte Carlo estimate of ``E ||(R F)_[r]||_p**p``."""

    p: float
    r: float
    mean: float
    stderr: float
    outer: int
    inner: int
    seed: int
    model: str
    label: str = ""
    per_draw: tuple[float, ...] = field(default=(), repr=False)

    def to_json(self, per_draw: bool = False) -> dict:
        out = {
            "p": self.p,
            "r": self.r,
            "mean": self.mean,
            "stderr": self.stderr,
            "outer": self.outer,
            "inner": self.inner,
            "seed": self.seed,
            "model": self.model,
            "label": self.label,
        }
        if per_draw:
            out["per_draw"] = list(self.per_draw)
        return out


def _draw_moment_table(F, model, ps, r, outer, inner, streams: SeedStreams, negate=False) -> np.ndarray:
    """Per-draw moments, shape ``(len(ps), outer)``; all exponents share each draw's sample."""
    N = int(F.indices[-1])
    base = dilate(F, r).values
    table = np.empty((len(ps), outer))
    for k in range(outer):
        X = draw(model, N, streams, index=k)
        x = X.at(F.indices)
        if negate:
            x = -x
        vals = sample_values(F, base * x, inner, streams.spawn("outer", k))[0]
        for i, p in enumerate(ps):
            table[i, k] = summarize(pth_power(vals, p))[0]
    return table


def _draw_moments(F, model, p, r, outer, inner, streams: SeedStreams, negate=False) -> list[float]:
    return _draw_moment_table(F, model, (p,), r, outer, inner, streams, negate)[0].tolist()


def randomized_moment(
    F: CoefficientSeries,
    model: RandomModel,
    p: float,
    r: float,
    outer: int = 200,
    inner: int = 2000,
    rng=None,
    negate: bool = False,
) -> MomentEstimate:
    """Nested Monte Carlo estimate of ``E ||(R F)_[r]||_p**p``.

    Each of ``outer`` realizations gets its own ``inner`` torus samples, so
    the per-draw estimates are independent and their spread gives the
    combined standard error (between-draw plus within-draw variance).
    ``negate`` replaces every draw ``X`` by ``-X``.
    """
    return randomized_moments(F, model, [p], r, outer, inner, rng, negate)[0]


def randomized_moments(
    F: CoefficientSeries,
    model: RandomModel,
    ps,
    r: float,
    outer: int = 200,
    inner: int = 2000,
    rng=None,
    negate: bool = False,
) -> list[MomentEstimate]:
    """:func:`randomized_moment` for several exponents over the same draws and samples."""
    ps = [check_exponent(p) for p in ps]
    r = check_radius(r)
    outer = check_samples(outer, "outer")
    inner = check_samples(inner, "inner")
    streams = as_streams(rng)
    if len(F) == 0:
        table = np.zeros((len(ps), outer))
    else:
        table = _draw_moment_table(F, model, ps, r, outer, inner, streams, negate)
    out = []
    for p, row in zip(ps, table):
        mean, se = summarize(row)
        out.append(MomentEstimate(p, r, mean, se, outer, inner, streams.seed, model.kind, F.label, tuple(row.tolist())))
    return out


@dataclass(frozen=True)
class OperatorNormReport:
    """Ratios ``(E ||(R F)_[r]||_p**2)**(1/2) / ||F||_2`` over a probe family."""

    p: float
    r: float
    model: str
    centered: bool
    ratios: tuple[float, ...]
    stderrs: tuple[float, ...]
    labels: tuple[str, ...]
    supports: tuple[int, ...]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "model": self.model,
            "centered": self.centered,
            "noncentered_warning": not self.centered,
            "max_ratio": self.max_ratio,
            "table": [
                {"label": lab, "support": s, "ratio": q, "stderr": e}
                for lab, s, q, e in zip(self.labels, self.supports, self.ratios, self.stderrs)
            ],
        }


def operator_norm_estimate(
    model: RandomModel,
    p: float,
    probes,
    r: float = 0.99,
    outer: int = 200,
    inner: int = 2000,
    rng=None,
) -> OperatorNormReport:
    """Empirical operator-norm ratios of the randomization over ``probes``.

    For each probe the per-draw p-th moments are raised to ``2/p``, averaged
    over draws and square-rooted, then divided by the undilated
    ``norm2_exact`` of the probe.  This gives a lower estimate of the
    operator norm restricted to the probe family, never a certified supremum.
    """
    probes = list(probes)
    if not probes:
        raise ValidationError("operator norm estimation needs at least one probe")
    p = check_exponent(p)
    r = check_radius(r)
    outer = check_samples(outer, "outer")
    inner = check_samples(inner, "inner")
    streams = as_streams(rng)
    if not model.centered:
        log.warning("operator norm estimate requested for a noncentered model")
    ratios, errs = [], []
    for i, F in enumerate(probes):
        norm = norm2_exact(F)
        if norm == 0.0:
            raise ValidationError(f"probe {i} has zero norm")
        moments = _draw_moments(F, model, p, r, outer, inner, streams.spawn("probe", i))
        q, se_q = summarize(np.asarray(moments) ** (2.0 / p))
        root = math.sqrt(q)
        ratios.append(root / norm)
        errs.append((se_q / (2.0 * root) if root > 0 else 0.0) / norm)
    return OperatorNormReport(
        p,
        r,
        model.kind,
        model.centered,
        tuple(ratios),
        tuple(errs),
        tuple(F.label for F in probes),
        tuple(len(F) for F in probes),
    )


def root_limit_diagnostic(X, window, by: str = "index") -> dict:
    """Statistics of ``|X_n|**(1/weight(n))`` over a window of indices.

    ``window`` is an inclusive ``(lo, hi)`` range of indices (``by="index"``)
    or of weights (``by="weight"``, restricted to ``n <= len(X)``).  Returns
    min, max and the largest deviation from 1, overall and per weight.
    """
    values = np.abs(X.values if isinstance(X, Realization) else np.asarray(X))
    N = len(values)
    lo, hi = (int(v) for v in window)
    w = weights_up_to(max(N, 1))
    if by == "index":
        if lo <= 1:
            raise ValidationError("window must exclude n = 1 (weight 0)")
        if hi > N:
            raise ValidationError(f"window end {hi} exceeds the realization length {N}")
        ns = np.arange(lo, hi + 1)
    elif by == "weight":
        if lo < 1:
            raise ValidationError("weight window must start at 1 or above")
        ns = np.flatnonzero((w >= lo) & (w <= hi))
        ns = ns[(ns >= 2) & (ns <= N)]
    else:
        raise ValidationError(f"window kind must be 'index' or 'weight', got {by!r}")
    if len(ns) == 0:
        raise ValidationError("window contains no indices")
    wt = w[ns]
    roots = values[ns - 1] ** (1.0 / wt)
    dev = np.abs(roots - 1.0)
    bands = {}
    for k in np.unique(wt).tolist():
        sel = wt == k
        bands[int(k)] = float(dev[sel].max())
    return {
        "count": int(len(ns)),
        "min": float(roots.min()),
        "max": float(roots.max()),
        "max_deviation": float(dev.max()),
        "bands": bands,
    }


def gaussian_tail_bound(x: float) -> tuple[float | None, float]:
    """Bounds for a standard normal ``X``.

    Returns ``(tail, small_ball)`` with ``P(|X| >= x) <= tail`` (only for
    ``x >= 1``, else ``None``) and ``P(|X| <= x) <= small_ball``.
    """
    x = float(x)
    if not x >= 0.0:
        raise ValidationError(f"x must be nonnegative, got {x}")
    c = math.sqrt(2.0 / math.pi)
    tail = c * math.exp(-0.5 * x * x) if x >= 1.0 else None
    return tail, c * x
