import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import circle_mean
from polytorus import dirichlet
from polytorus.dirichlet import (
    DirichletPolynomial,
    besicovitch_norm,
    bohr_inverse,
    bohr_lift,
    evaluate_dirichlet,
    isometry_check,
    max_step,
    randomize_dirichlet,
    time_shift,
    vertical_translate,
)
from polytorus.monomial import weight
from polytorus.randomizer import RandomModel, draw, randomize
from polytorus.series import CoefficientSeries, dilate
from polytorus.validation import ValidationError

terms = st.dictionaries(
    st.integers(1, 200),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    max_size=12,
)


def test_polynomial_basics():
    Q = DirichletPolynomial({3: 1, 1: 2j, 5: 0})
    assert Q.indices.tolist() == [1, 3]
    assert Q[3] == 1 and Q[5] == 0
    assert DirichletPolynomial([(1, 2j), (3, 1)]) == Q
    for bad in ({0: 1}, {-1: 1}, {2.5: 1}):
        with pytest.raises(ValidationError):
            DirichletPolynomial(bad)
    with pytest.raises(ValidationError):
        DirichletPolynomial([(2, 1), (2, 3)])


def test_evaluate_examples():
    c = 1.5 - 2j
    assert evaluate_dirichlet(DirichletPolynomial({1: c}), 0.3 + 7j) == c
    assert evaluate_dirichlet(DirichletPolynomial({2: 1}), 0) == 1
    t = np.linspace(-50, 50, 101)
    vals = evaluate_dirichlet(DirichletPolynomial({2: 1}), 1j * t)
    np.testing.assert_allclose(np.abs(vals), 1.0, rtol=1e-14)


def test_evaluate_matches_power_formula():
    Q = DirichletPolynomial({1: 1, 2: -0.5, 6: 2j, 35: 0.1})
    s = 0.7 + 3.1j
    direct = sum(a * cmath.exp(-s * math.log(n)) for n, a in Q.terms.items())
    assert evaluate_dirichlet(Q, s) == pytest.approx(direct, rel=1e-13)


def test_translate_examples():
    Q = DirichletPolynomial({4: 1, 2: 3j})
    assert vertical_translate(Q, 0) == Q
    assert vertical_translate(DirichletPolynomial({4: 1}), 1)[4] == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(ValidationError):
        vertical_translate(Q, math.inf)


@settings(max_examples=50, deadline=None)
@given(terms, st.floats(-2, 2), st.floats(-2, 2))
def test_translate_is_additive(tq, s1, s2):
    Q = DirichletPolynomial(tq)
    twice = vertical_translate(vertical_translate(Q, s1), s2)
    once = vertical_translate(Q, s1 + s2)
    assert twice.indices.tolist() == once.indices.tolist()
    np.testing.assert_allclose(twice.values, once.values, rtol=1e-12)


def test_translate_evaluates_shifted_argument():
    Q = DirichletPolynomial({1: 1, 2: 1, 3: -1j})
    s = 0.2 + 4j
    assert evaluate_dirichlet(vertical_translate(Q, 0.5), s) == pytest.approx(evaluate_dirichlet(Q, s + 0.5))
    assert evaluate_dirichlet(time_shift(Q, 2.0), s) == pytest.approx(evaluate_dirichlet(Q, s + 2j))


def test_lift_examples():
    F = bohr_lift(DirichletPolynomial({2: 3, 6: 5}, label="q"))
    assert F.coefficients == {2: 3, 6: 5}
    assert F.label.endswith("q") and F.label != "q"
    # a_2 sits on w_1 and a_6 on w_1 w_2
    w = np.array([[0.3j], [-0.5]])
    np.testing.assert_allclose(F.basis.evaluate(w)[:, 0], [0.3j, -0.15j])
    c = 2 - 1j
    const = bohr_lift(DirichletPolynomial({1: c}))
    assert const.coefficients == {1: c}


@settings(max_examples=50, deadline=None)
@given(terms)
def test_lift_and_inverse_are_mutual(tq):
    Q = DirichletPolynomial(tq, label="x")
    back = bohr_inverse(bohr_lift(Q))
    assert back == Q and back.label == "x"
    F = CoefficientSeries(tq, label="y")
    assert bohr_lift(bohr_inverse(F)) == F


@settings(max_examples=50, deadline=None)
@given(
    terms,
    terms,
    st.complex_numbers(max_magnitude=3, allow_nan=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False),
)
def test_lift_is_linear(t1, t2, a, b):
    Q1, Q2 = DirichletPolynomial(t1), DirichletPolynomial(t2)
    lhs = bohr_lift(Q1 * a + Q2 * b)
    rhs = bohr_lift(Q1) * a + bohr_lift(Q2) * b
    keys = set(lhs.coefficients) | set(rhs.coefficients)
    for n in keys:
        assert lhs[n] == pytest.approx(rhs[n], abs=1e-12)


def test_translate_is_not_dilate():
    Q = DirichletPolynomial({2: 1, 3: 1})
    sigma, r = 0.5, 0.7
    translated = bohr_lift(vertical_translate(Q, sigma))
    dilated = dilate(bohr_lift(Q), r).as_series()
    assert not np.allclose(translated.values, dilated.values)
    assert translated[2] == pytest.approx(2**-sigma)
    assert translated[3] == pytest.approx(3**-sigma)


@pytest.mark.parametrize("n", [2, 3, 12, 35])
def test_translate_matches_dilate_per_term(n):
    r = 0.7
    sigma = weight(n) * math.log(1 / r) / math.log(n)
    Q = DirichletPolynomial({n: 1.0})
    a = bohr_lift(vertical_translate(Q, sigma))[n]
    b = dilate(bohr_lift(Q), r).values[0]
    assert a == pytest.approx(b, rel=1e-13)


def test_randomize_commutes_with_lift():
    Q = DirichletPolynomial({1: 1, 2: 1, 3: 1, 10: -2j})
    for model in (RandomModel.bernoulli(), RandomModel.steinhaus(), RandomModel.gaussian_iid()):
        X = draw(model, 10, 3)
        assert bohr_lift(randomize_dirichlet(Q, X)) == randomize(bohr_lift(Q), X)


def test_max_step_rule():
    assert max_step(DirichletPolynomial({1: 1})) == 0.1
    assert max_step(DirichletPolynomial({2: 1})) == 0.1
    assert max_step(DirichletPolynomial({1000: 1})) == pytest.approx(math.pi / (5 * math.log(1000)))


@pytest.mark.parametrize("n0, p", [(1, 1.0), (7, 2.0), (30, 3.5)])
def test_single_term_time_average(n0, p):
    rep = besicovitch_norm(DirichletPolynomial({n0: 1}), p, 50)
    assert rep.norm == pytest.approx(1.0, abs=1e-6)
    assert rep.diagnostic < 1e-6


def test_pair_parseval_at_T_1000():
    rep = besicovitch_norm(DirichletPolynomial({1: 1, 2: 1}), 2, 1e3)
    assert rep.norm == pytest.approx(math.sqrt(2), rel=0.02)


def test_error_shrinks_along_T_ladder():
    Q = DirichletPolynomial({1: 1, 2: 1})
    errs = [abs(besicovitch_norm(Q, 2, T).power_mean - 2) for T in (1e2, 1e3, 1e4)]
    assert errs[0] > errs[1] > errs[2]
    # closed form of the same trapezoid target: 2 + 2 sin(T ln 2)/(T ln 2)
    for T, e in zip((1e2, 1e3, 1e4), errs):
        exact = abs(2 * math.sin(T * math.log(2)) / (T * math.log(2)))
        assert e == pytest.approx(exact, abs=1e-5)  # trapezoid O(h^2) error


def test_three_term_isometry_at_T_1e4():
    rep = besicovitch_norm(DirichletPolynomial({1: 1, 2: 1, 3: 1}), 2, 1e4)
    assert rep.power_mean == pytest.approx(3.0, rel=0.01)


def test_unimodular_invariance():
    Q = DirichletPolynomial({1: 1, 2: 0.5, 3: -1, 5: 0.25j})
    a = besicovitch_norm(Q, 3, 2000)
    b = besicovitch_norm(time_shift(Q, 17.3), 3, 2000)
    assert abs(a.power_mean - b.power_mean) <= a.diagnostic + b.diagnostic


def test_quadrature_independent_of_panels(monkeypatch):
    Q = DirichletPolynomial({1: 1, 2: 1, 3: 1, 5: 1})
    base = besicovitch_norm(Q, 3, 200)
    monkeypatch.setattr(dirichlet, "_PANEL", 97)
    other = besicovitch_norm(Q, 3, 200)
    assert other.power_mean == pytest.approx(base.power_mean, rel=1e-14)


def test_quadrature_validation():
    Q = DirichletPolynomial({1: 1, 2: 1})
    with pytest.raises(ValidationError):
        besicovitch_norm(Q, 2, 5)
    with pytest.raises(ValidationError):
        besicovitch_norm(Q, 2, 100, step=0.5)
    with pytest.raises(ValidationError):
        besicovitch_norm(Q, 0.5, 100)
    assert besicovitch_norm(Q, 2, 100, step=0.05).step == 0.05


def test_isometry_constant():
    c = 3 - 4j
    rep = isometry_check(DirichletPolynomial({1: c}), 2.5, 20, samples=100, rng=1)
    assert rep.time_average == pytest.approx(abs(c) ** 2.5, rel=1e-13)
    assert rep.torus_mean == pytest.approx(abs(c) ** 2.5, rel=1e-13)
    assert rep.passed


def test_isometry_three_terms():
    rep = isometry_check(DirichletPolynomial({1: 1, 2: 1, 3: 1}), 2, 1e4, samples=10_000, rng=2)
    assert rep.passed
    assert abs(rep.torus_mean - 3) <= 3 * rep.torus_stderr
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["passed"] is True and obj["seed"] == 2


def test_isometry_fourth_power():
    oracle = circle_mean(lambda th: abs(1 + cmath.exp(1j * th)) ** 4)
    assert oracle == pytest.approx(6.0, rel=1e-12)
    rep = isometry_check(DirichletPolynomial({1: 1, 2: 1}), 4, 1e4, samples=10_000, rng=3)
    assert rep.passed
    assert abs(rep.torus_mean - oracle) <= 3 * rep.torus_stderr
    assert abs(rep.time_average - oracle) <= rep.diagnostic + 0.01


@settings(max_examples=50, deadline=None)
@given(terms)
def test_json_roundtrip(tq):
    Q = DirichletPolynomial(tq, label="j")
    back = DirichletPolynomial.from_json(json.loads(json.dumps(Q.to_json())))
    assert back == Q


def test_json_errors():
    with pytest.raises(ValidationError):
        DirichletPolynomial.from_json({"coeffs": []})
    with pytest.raises(ValidationError):
        DirichletPolynomial.from_json({"terms": [[2, 1]]})
