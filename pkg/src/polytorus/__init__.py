"""Monomial series on the infinite torus: dilations, Monte Carlo Hardy norms,
random multipliers and the Bohr lift of Dirichlet polynomials.

The scikit-learn style wrappers live in :mod:`polytorus.estimators` and are
not imported here.
"""

from ._version import __version__
from .convergence import RootTestReport, euler_product, geometric_weight_sum, root_test
from .dirichlet import (
    DirichletPolynomial,
    besicovitch_norm,
    bohr_inverse,
    bohr_lift,
    evaluate_dirichlet,
    isometry_check,
    vertical_translate,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    run_bohr,
    run_dichotomy,
    run_experiment,
    run_khintchine,
    run_mean_shift,
)
from .families import FAMILIES, family_series, membership_certificate
from .monomial import (
    ExponentVector,
    MaxIndex,
    MaxWeight,
    MonomialIndex,
    factorize,
    index_of,
    parse_truncation,
    weight,
    weight_graded_indices,
)
from .randomizer import (
    RandomModel,
    Realization,
    draw,
    operator_norm_estimate,
    randomize,
    randomized_moment,
    second_moment,
)
from .rng import SeedStreams
from .series import (
    CoefficientSeries,
    DilatedSeries,
    Multiplier,
    coeff_bound_check,
    dilate,
    multiplier_apply,
    norm2_exact,
    partial_sum,
)
from .torus import NormEstimate, TorusPoint, evaluate, mc_norm, norm_profile, sample_torus
from .validation import DomainError, IndexOverflowError, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
