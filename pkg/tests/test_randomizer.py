import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import euler_product, gaussian_abs_tail, hand_cholesky
from polytorus.monomial import weight, weight_graded_indices
from polytorus.randomizer import (
    RandomModel,
    Realization,
    covariance_factor,
    draw,
    gaussian_tail_bound,
    operator_norm_estimate,
    randomize,
    randomized_moment,
    randomized_moments,
    root_limit_diagnostic,
    second_moment,
)
from polytorus.series import CoefficientSeries, dilate, norm2_exact
from polytorus.validation import ValidationError

BERN = RandomModel.bernoulli()
STEIN = RandomModel.steinhaus()
GAUSS = RandomModel.gaussian_iid()


def ones(N):
    return Realization(np.ones(N), BERN)


# draws


def test_bernoulli_values_and_mean():
    X = draw(BERN, 100_000, 3)
    assert set(np.unique(X.values).tolist()) == {-1.0, 1.0}
    assert abs(X.values.mean()) < 0.01


def test_steinhaus_moduli():
    X = draw(STEIN, 5000, 1)
    np.testing.assert_allclose(np.abs(X.values), 1.0, atol=1e-12)
    assert np.iscomplexobj(X.values)


def test_gaussian_process_identity_variance():
    model = RandomModel.gaussian_process(np.eye(4))
    rows = np.array([draw(model, 4, 21, index=k).values for k in range(10_000)])
    np.testing.assert_allclose(rows.var(axis=0, ddof=1), 1.0, rtol=0.05)
    assert np.all(np.abs(rows.mean(axis=0)) < 0.05)


def test_draw_is_deterministic_and_indexed():
    a = draw(GAUSS, 50, 8, index=2)
    b = draw(GAUSS, 50, 8, index=2)
    c = draw(GAUSS, 50, 8, index=3)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    # prefix property: a longer draw extends a shorter one
    assert np.array_equal(draw(GAUSS, 20, 8, index=2).values, a.values[:20])


def test_draw_rejects_length_beyond_process():
    model = RandomModel.gaussian_process(np.eye(3))
    with pytest.raises(ValidationError, match="exceeds"):
        draw(model, 4, 1)


def test_model_json():
    assert RandomModel.from_json({"kind": "steinhaus"}).kind == "steinhaus"
    m = RandomModel.from_json({"kind": "gaussian_process", "mean": [1, 0], "covariance": {"diag": [1, 4]}})
    assert np.array_equal(m.covariance, np.diag([1.0, 4.0]))
    assert not m.centered and m.centered_part().centered
    assert RandomModel.from_json(m.to_json()).to_json() == m.to_json()
    with pytest.raises(ValidationError):
        RandomModel.from_json({"kind": "cauchy"})
    with pytest.raises(ValidationError):
        RandomModel.from_json({"kind": "gaussian_process"})
    with pytest.raises(ValidationError):
        RandomModel("bernoulli", mean=np.zeros(2))


# covariance factor


def test_factor_examples():
    np.testing.assert_array_equal(covariance_factor(np.eye(3)), np.eye(3))
    K = [[4.0, 2.0], [2.0, 2.0]]
    L = covariance_factor(K)
    np.testing.assert_allclose(L, hand_cholesky(K), atol=1e-15)
    np.testing.assert_allclose(L, [[2, 0], [1, 1]], atol=1e-15)
    np.testing.assert_allclose(covariance_factor(np.diag([1.0, 4.0, 9.0])), np.diag([1.0, 2.0, 3.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_factor_reproduces_random_gram_matrix(n, k, seed):
    A = np.random.default_rng(seed).standard_normal((k, n))
    K = A.T @ A
    L = covariance_factor(K)
    assert np.allclose(L, np.tril(L))
    assert np.max(np.abs(L @ L.T - K)) <= 1e-8 * np.max(np.abs(K))


def test_factor_rank_deficient_and_clipped(caplog):
    v = np.array([1.0, 2.0, -1.0])
    K = np.outer(v, v)
    L = covariance_factor(K)
    assert np.max(np.abs(L @ L.T - K)) <= 1e-8 * np.max(np.abs(K))
    # slightly indefinite: eigenvalue -1e-13 is inside the tolerance
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))
    K2 = (Q * np.array([-1e-13, 1.0, 2.0])) @ Q.T
    K2 = 0.5 * (K2 + K2.T)
    with caplog.at_level(logging.WARNING):
        L2 = covariance_factor(K2)
    assert np.max(np.abs(L2 @ L2.T - K2)) <= 1e-8 * 2.0


def test_factor_errors():
    with pytest.raises(ValidationError, match="positive semidefinite"):
        covariance_factor([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValidationError, match="symmetric"):
        covariance_factor([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        covariance_factor([[1.0, 0.0]])
    with pytest.raises(ValidationError, match="positive semidefinite"):
        RandomModel.gaussian_process([[1.0, 2.0], [2.0, 1.0]])


# randomize


def test_randomize_examples():
    F = CoefficientSeries({1: 1, 2: -2, 6: 0.5j})
    assert randomize(F, ones(6)) == F
    S = randomize(F, draw(STEIN, 6, 2))
    assert norm2_exact(S) == pytest.approx(norm2_exact(F), rel=1e-15)
    R = CoefficientSeries({1: 1.0, 2: -2.0, 6: 0.5})
    assert norm2_exact(randomize(R, draw(BERN, 6, 2))) == norm2_exact(R)


def test_randomize_needs_cover():
    with pytest.raises(ValidationError, match="index 9"):
        randomize(CoefficientSeries({9: 1}), ones(5))


@settings(max_examples=50, deadline=None)
@given(
    st.dictionaries(st.integers(1, 500), st.floats(-10, 10, allow_nan=False), max_size=30),
    st.integers(0, 2**32 - 1),
)
def test_unimodular_randomization_is_isometric(coeffs, seed):
    F = CoefficientSeries(coeffs)
    assert norm2_exact(randomize(F, draw(BERN, 500, seed))) == norm2_exact(F)
    assert norm2_exact(randomize(F, draw(STEIN, 500, seed))) == pytest.approx(norm2_exact(F), rel=1e-14)


# moments


def test_constant_term_bernoulli_is_exact():
    est = randomized_moment(CoefficientSeries({1: 1}), BERN, 2, 0.4, outer=10, inner=10, rng=1)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_gaussian_pair_moment():
    est = randomized_moment(CoefficientSeries({2: 1, 3: 1}), GAUSS, 2, 0.9, rng=2)
    assert abs(est.mean - (0.81 + 0.6561)) <= 3 * est.stderr


def test_gaussian_process_single_term():
    # the 1x1 example {2: 1} with K = [[4]] needs a length-2 process
    model = RandomModel.gaussian_process(np.diag([1.0, 4.0]))
    F = CoefficientSeries({2: 1})
    assert second_moment(F, model, 0.5) == pytest.approx(1.0)
    est = randomized_moment(F, model, 2, 0.5, rng=3)
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_negation_is_bit_identical():
    F = CoefficientSeries({2: 1, 3: -0.5, 5: 0.25, 12: 0.1})
    for model in (BERN, GAUSS):
        a = randomized_moment(F, model, 3, 0.9, outer=20, inner=200, rng=4)
        b = randomized_moment(F, model, 3, 0.9, outer=20, inner=200, rng=4, negate=True)
        assert a.per_draw == b.per_draw and a.mean == b.mean


def test_moments_share_draws():
    F = CoefficientSeries({2: 1, 3: 1})
    pair = randomized_moments(F, GAUSS, [1, 4], 0.9, outer=20, inner=100, rng=5)
    single = randomized_moment(F, GAUSS, 4, 0.9, outer=20, inner=100, rng=5)
    assert pair[1] == single


def test_diagonal_closed_form():
    sig2 = np.arange(1, 31, dtype=float)
    model = RandomModel.gaussian_process(np.diag(sig2))
    F = CoefficientSeries({n: 1 / n for n in range(1, 31)})
    r = 0.9
    oracle = sum(sig2[n - 1] / n**2 * r ** (2 * weight(n)) for n in range(1, 31))
    assert second_moment(F, model, r) == pytest.approx(oracle, rel=1e-13)
    est = randomized_moment(F, model, 2, r, rng=6)
    assert abs(est.mean - oracle) <= 3 * est.stderr


def test_moment_validation():
    F = CoefficientSeries({2: 1})
    for kw in ({"p": 0.5}, {"r": 0.0}, {"outer": 1}, {"inner": 1}):
        args = {"p": 2, "r": 0.5, "outer": 10, "inner": 10} | kw
        with pytest.raises(ValidationError):
            randomized_moment(F, BERN, rng=1, **args)


# operator norm


def test_operator_norm_single_probe():
    r = 0.9
    rep = operator_norm_estimate(GAUSS, 2, [CoefficientSeries({2: 1})], r=r, rng=7)
    assert abs(rep.ratios[0] - r) <= 3 * rep.stderrs[0]
    bern = operator_norm_estimate(BERN, 2, [CoefficientSeries({2: 1})], r=r, outer=5, inner=5, rng=7)
    assert bern.ratios[0] == pytest.approx(r, rel=1e-14)


def test_operator_norm_bernoulli_matches_dilated_ratio():
    F = CoefficientSeries({2: 1, 3: 1, 5: 0.5})
    r = 0.8
    rep = operator_norm_estimate(BERN, 2, [F], r=r, outer=50, inner=2000, rng=8)
    target = norm2_exact(dilate(F, r)) / norm2_exact(F)
    assert abs(rep.ratios[0] - target) <= 3 * rep.stderrs[0]


def test_operator_norm_bounded_versus_growing():
    blocks = [CoefficientSeries({n: 1.0 for n in range(2, 2 + k)}, label=f"k{k}") for k in (1, 8, 64)]
    N = 65
    flat = RandomModel.gaussian_process(np.eye(N))
    grow = RandomModel.gaussian_process(np.diag(np.arange(1, N + 1, dtype=float)))
    a = operator_norm_estimate(flat, 2, blocks, r=0.99, outer=40, inner=300, rng=9)
    b = operator_norm_estimate(grow, 2, blocks, r=0.99, outer=40, inner=300, rng=9)
    assert a.max_ratio < 1.2
    assert b.ratios[-1] > 3 * b.ratios[0]
    obj = b.to_json()
    assert obj["centered"] and [row["support"] for row in obj["table"]] == [1, 8, 64]


def test_operator_norm_errors_and_warning(caplog):
    with pytest.raises(ValidationError):
        operator_norm_estimate(GAUSS, 2, [], rng=1)
    with pytest.raises(ValidationError, match="zero norm"):
        operator_norm_estimate(GAUSS, 2, [CoefficientSeries()], rng=1)
    shifted = RandomModel.gaussian_process(np.eye(3), mean=[1.0, 1.0, 1.0])
    with caplog.at_level(logging.WARNING):
        rep = operator_norm_estimate(shifted, 2, [CoefficientSeries({2: 1})], outer=3, inner=3, rng=1)
    assert rep.to_json()["noncentered_warning"]
    assert "noncentered" in caplog.text


# root limit and tail bounds


def test_root_limit_examples():
    N = 200
    assert root_limit_diagnostic(np.ones(N), (2, N))["max_deviation"] == 0.0
    pow2 = np.array([2.0 ** weight(n) for n in range(1, N + 1)])
    rep = root_limit_diagnostic(pow2, (2, N))
    assert rep["min"] == pytest.approx(2.0, rel=1e-15) and rep["max"] == pytest.approx(2.0, rel=1e-15)


def test_root_limit_rejects_weight_zero():
    with pytest.raises(ValidationError, match="n = 1"):
        root_limit_diagnostic(np.ones(10), (1, 10))
    with pytest.raises(ValidationError):
        root_limit_diagnostic(np.ones(10), (2, 11))
    with pytest.raises(ValidationError):
        root_limit_diagnostic(np.ones(10), (2, 5), by="prime")


def test_root_limit_index_windows_shrink():
    # a single tiny |X_n| at low weight can dominate one run, so count seeds
    wins = 0
    for seed in range(10):
        X = draw(GAUSS, 100_000, seed)
        early = root_limit_diagnostic(X, (100, 1000))
        late = root_limit_diagnostic(X, (10_000, 100_000))
        assert late["count"] == 90_001
        wins += late["max_deviation"] < early["max_deviation"]
    assert wins >= 7


def test_tail_bound_examples():
    tail, ball = gaussian_tail_bound(1.0)
    assert tail == pytest.approx(0.48394, abs=5e-6)
    assert gaussian_abs_tail(1.0) == pytest.approx(0.31731, abs=5e-6)
    assert gaussian_abs_tail(1.0) <= tail
    assert gaussian_tail_bound(0.0) == (None, 0.0)
    assert gaussian_tail_bound(0.5)[0] is None
    with pytest.raises(ValidationError):
        gaussian_tail_bound(-1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 8.0), st.floats(0.0, 3.0))
def test_tail_bounds_dominate_erfc(x, y):
    assert gaussian_abs_tail(x) <= gaussian_tail_bound(x)[0]
    assert 1.0 - gaussian_abs_tail(y) <= gaussian_tail_bound(y)[1] + 1e-15


@pytest.mark.parametrize("r", [0.5, 0.8])
def test_weight_graded_square_sum_approaches_product(r):
    limit = euler_product(r * r, terms=200)
    errs = []
    for W in (5, 10, 20, 40):
        _, ws = weight_graded_indices(W)
        errs.append(limit - math.fsum((r ** (2 * ws.astype(float))).tolist()))
    slack = 1e-14 * limit
    assert all(e >= -slack for e in errs)
    assert all(b <= a + slack for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3 * limit
