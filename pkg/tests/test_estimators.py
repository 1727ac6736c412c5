import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from polytorus.dirichlet import DirichletPolynomial
from polytorus.estimators import (
    BohrLift,
    Dilation,
    NormProfileEstimator,
    RandomizedMomentEstimator,
    Randomizer,
    TorusNormEstimator,
    check_series,
)
from polytorus.randomizer import second_moment, RandomModel
from polytorus.series import CoefficientSeries, dilate, norm2_exact, series_to_json
from polytorus.torus import mc_norm
from polytorus.validation import ValidationError

F = CoefficientSeries({2: 1, 3: 1}, label="pair")


def test_check_series_forms():
    assert check_series(F) is F
    assert check_series({2: 1, 3: 1}) == F
    assert check_series(series_to_json(F)) == F
    assert check_series(dilate(F, 1.0)) == F
    with pytest.raises(ValidationError):
        check_series([1, 2])


def test_params_and_clone():
    est = TorusNormEstimator(p=3, r=0.5, samples=100, seed=4)
    assert est.get_params() == {"p": 3, "r": 0.5, "samples": 100, "seed": 4}
    other = clone(est).set_params(seed=5)
    assert other.seed == 5 and est.seed == 4


def test_dilation_transformer():
    out = Dilation(r=0.5).fit().transform([F, {4: 1}])
    assert out[0].coefficients == pytest.approx({2: 0.5, 3: 0.25})
    assert out[1].coefficients == pytest.approx({4: 0.25})
    with pytest.raises(Exception):
        Dilation(r=2.0).fit()


def test_bohr_lift_roundtrip():
    Q = DirichletPolynomial({1: 1, 6: 2j})
    lift = BohrLift().fit()
    (G,) = lift.transform(Q)
    assert lift.inverse_transform(G) == [Q]


def test_randomizer_transformer():
    R = Randomizer(model="steinhaus", seed=3).fit([F, {10: 1}])
    assert len(R.realization_) == 10
    (G,) = R.transform(F)
    assert norm2_exact(G) == pytest.approx(norm2_exact(F), rel=1e-15)
    with pytest.raises(NotFittedError):
        Randomizer().transform(F)


def test_norm_estimator_matches_functional():
    est = TorusNormEstimator(p=2, r=0.9, samples=2000, seed=6).fit(F)
    ref = mc_norm(F, 2, 0.9, 2000, rng=6)
    assert est.estimate_ == ref and est.mean_ == ref.mean and est.norm_ == pytest.approx(ref.mean**0.5)
    table = est.transform([F, F])
    assert table.shape == (2, 2) and np.all(table[0] == table[1])
    with pytest.raises(ValidationError):
        est.fit([F, F])


def test_pipeline_dilate_then_norm():
    pipe = make_pipeline(Dilation(r=0.9), TorusNormEstimator(p=2, r=1.0, samples=2000, seed=1))
    pipe.fit(F)
    # dilating first then measuring at r = 1 is the same as measuring at r = 0.9
    assert pipe[-1].mean_ == pytest.approx(mc_norm(F, 2, 0.9, 2000, rng=1).mean, rel=1e-12)


def test_profile_estimator():
    est = NormProfileEstimator(p=2, ladder=(0.5, 0.9), samples=500, seed=2).fit(F)
    assert [e.r for e in est.profile_] == [0.5, 0.9]
    assert est.transform(F).shape == (1, 2)


def test_moment_estimator():
    est = RandomizedMomentEstimator(model={"kind": "gaussian_iid"}, p=2, r=0.9, outer=100, inner=200, seed=3).fit(F)
    assert est.second_moment_ == pytest.approx(0.81 + 0.6561)
    assert abs(est.mean_ - est.second_moment_) <= 3 * est.stderr_
    gp = RandomizedMomentEstimator(model=RandomModel.gaussian_process(np.eye(3)), outer=5, inner=5).fit(F)
    assert gp.second_moment_ == second_moment(F, RandomModel.gaussian_iid(), 0.9)
