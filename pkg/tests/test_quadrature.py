from fractions import Fraction
from math import factorial

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from charfem import quadrature as q

T = sympy.Symbol("t")


def mp_rule(p, s, dps=40):
    """High-precision oracle: knots of P_p(2t-1) - s P_{p-1}(2t-1), moment weights."""
    with mpmath.workdps(dps):
        poly = sympy.legendre(p, 2 * T - 1) - sympy.Rational(s) * sympy.legendre(p - 1, 2 * T - 1)
        roots = sympy.Poly(sympy.expand(poly), T).nroots(n=dps, maxsteps=200)
        knots = sorted(mpmath.mpf(str(sympy.re(r))) for r in roots)
        vander = mpmath.matrix([[k ** j for k in knots] for j in range(p)])
        moments = mpmath.matrix([mpmath.mpf(1) / (j + 1) for j in range(p)])
        weights = mpmath.lu_solve(vander, moments)
        top = sum(w * k ** (2 * p - 1) for w, k in zip(weights, knots))
        cp = (top - mpmath.mpf(1) / (2 * p)) / factorial(2 * p - 1)
        return ([float(k) for k in knots], [float(w) for w in weights], float(cp))


def test_gauss_p2_knots_and_weights():
    rule = q.gauss_rule(2)
    np.testing.assert_allclose(rule.knots, [0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6],
                               atol=1e-15)
    np.testing.assert_allclose(rule.weights, [0.5, 0.5], atol=1e-15)
    assert rule.c_p == 0.0


def test_radau_p2_matches_exact_values():
    rule = q.radau_rule(2)
    np.testing.assert_allclose(rule.knots, [1 / 3, 1.0], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [0.75, 0.25], atol=1e-15)
    # exact rational arithmetic for the error constant
    top = Fraction(3, 4) * Fraction(1, 27) + Fraction(1, 4)
    assert abs(rule.c_p - float((top - Fraction(1, 4)) / 6)) < 1e-15
    assert abs(rule.c_p - 1 / 216) < 1e-15


def test_radau_p1_is_backward_euler_knot():
    rule = q.radau_rule(1)
    assert rule.knots[0] == 1.0 and rule.weights[0] == 1.0
    assert abs(rule.c_p - 0.5) < 1e-15


def test_theta_p1_knot():
    rule = q.theta_rule(1, 0.5)
    assert abs(rule.knots[0] - 0.75) < 1e-15


@pytest.mark.parametrize("p", range(1, 9))
@pytest.mark.parametrize("s", ["0", "1/4", "1/2", "1"])
def test_rule_matches_high_precision_oracle(p, s):
    knots, weights, cp = mp_rule(p, s)
    rule = q.theta_rule(p, float(Fraction(s)))
    np.testing.assert_allclose(rule.knots, knots, atol=1e-13)
    np.testing.assert_allclose(rule.weights, weights, atol=1e-13)
    assert abs(rule.c_p - cp) <= 1e-12


@pytest.mark.parametrize("p", range(1, 9))
def test_gauss_and_radau_exact_to_their_orders(p):
    for rule, top in [(q.gauss_rule(p), 2 * p - 1), (q.radau_rule(p), 2 * p - 2)]:
        for k in range(top + 1):
            assert abs(q.apply(rule, rule.knots ** k) - 1 / (k + 1)) <= 1e-12


@pytest.mark.parametrize("p", [0, 9, 2.5, -1])
def test_degree_out_of_range(p):
    with pytest.raises(q.QuadratureError):
        q.gauss_rule(p)
    with pytest.raises(q.QuadratureError):
        q.radau_rule(p)


@pytest.mark.parametrize("s", [-0.1, 1.5])
def test_theta_parameter_out_of_range(s):
    with pytest.raises(q.QuadratureError):
        q.theta_rule(2, s)


def test_apply_length_mismatch():
    with pytest.raises(q.QuadratureError):
        q.apply(q.gauss_rule(3), np.ones(2))


def test_make_rule_names():
    assert q.make_rule("gauss", 3).name == "gauss"
    assert q.make_rule("radau", 3).name == "radau"
    assert q.make_rule("theta:0.5", 2).name == "theta:0.5"
    with pytest.raises(q.QuadratureError):
        q.make_rule("lobatto", 2)


def test_rule_table_prints():
    text = str(q.radau_rule(2))
    assert "radau" in text and "0.3333333333333333" in text


@settings(max_examples=60, deadline=None)
@given(p=st.integers(1, 4), s=st.floats(0.0, 1.0))
def test_knots_increase_with_family_parameter(p, s):
    lo = q.theta_rule(p, s)
    hi = q.theta_rule(p, min(1.0, s + 0.05))
    assert np.all(hi.knots >= lo.knots - 1e-14)
    assert np.all(np.diff(lo.knots) > 0) and lo.knots[0] > 0 and lo.knots[-1] <= 1


@pytest.mark.parametrize("p", range(1, 5))
def test_knots_monotone_on_grid(p):
    grid = np.linspace(0.0, 1.0, 11)
    knots = np.array([q.theta_rule(p, s).knots for s in grid])
    assert np.all(np.diff(knots, axis=0) >= -1e-14)


@settings(max_examples=50, deadline=None)
@given(p=st.integers(1, 8), s=st.floats(0.0, 1.0))
def test_weights_positive_and_cp_nonnegative(p, s):
    rule = q.theta_rule(p, s)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 1.0) < 1e-13
    assert rule.c_p >= 0.0
