import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from charfem import time_basis as tb
from charfem.quadrature import gauss_rule, radau_rule

T = sympy.Symbol("t")


def sympy_lagrange(nodes, k):
    expr = sympy.Integer(1)
    for m, z in enumerate(nodes):
        if m != k:
            expr *= (T - z) / (nodes[k] - z)
    return sympy.expand(expr)


def test_middle_basis_function_on_equispaced_p2():
    basis = tb.make_basis([0.0, 0.5, 1.0])
    assert tb.eval(basis, 2, 0.5) == 0.0
    for t in np.linspace(0, 1, 7):
        assert abs(tb.eval(basis, 1, t) - (-4 * t * t + 4 * t)) < 1e-15


def test_derivative_at_gauss_knot():
    basis = tb.make_basis([0.0, 1.0])
    assert abs(tb.eval_deriv(basis, 1, 0.37) - 1.0) < 1e-15
    basis2 = tb.make_basis([0.0, 0.5, 1.0])
    t1 = 0.5 - np.sqrt(3) / 6
    assert abs(tb.eval_deriv(basis2, 1, t1) - 4 * np.sqrt(3) / 3) < 1e-14


@pytest.mark.parametrize("policy", ["coincident", "equispaced"])
def test_derivative_matrix_p2_against_symbolic_oracle(policy):
    rule = gauss_rule(2)
    basis = tb.make_time_basis(policy, rule)
    if policy == "coincident":
        nodes = [sympy.Integer(0), sympy.Rational(1, 2) - sympy.sqrt(3) / 6,
                 sympy.Rational(1, 2) + sympy.sqrt(3) / 6]
    else:
        nodes = [sympy.Integer(0), sympy.Rational(1, 2), sympy.Integer(1)]
    knots = [sympy.Rational(1, 2) - sympy.sqrt(3) / 6, sympy.Rational(1, 2) + sympy.sqrt(3) / 6]
    oracle = np.array([[float(sympy.diff(sympy_lagrange(nodes, k), T).subs(T, knots[j]))
                        for k in (1, 2)] for j in (0, 1)])
    B = tb.derivative_matrix(basis, rule).entries
    np.testing.assert_allclose(B, oracle, atol=1e-13)


def test_derivative_matrix_equispaced_p2_values():
    B = tb.derivative_matrix(tb.make_basis([0.0, 0.5, 1.0]), gauss_rule(2)).entries
    np.testing.assert_allclose(B, [[2.309401, -0.154701], [-2.309401, 2.154701]], atol=1e-6)
    assert abs(np.linalg.det(B) - 4.6188) < 1e-3


@pytest.mark.parametrize("rule", [gauss_rule(1), radau_rule(1)])
def test_derivative_matrix_p1_linear_basis(rule):
    B = tb.derivative_matrix(tb.make_basis([0.0, 1.0]), rule).entries
    np.testing.assert_allclose(B, [[1.0]], atol=1e-15)


def test_repeated_nodes_rejected():
    with pytest.raises(tb.TimeBasisError):
        tb.make_basis([0.0, 0.3, 0.3])


@pytest.mark.parametrize("nodes", [[0.1, 0.5], [0.0, 1.2], [0.0]])
def test_invalid_node_sets(nodes):
    with pytest.raises(tb.TimeBasisError):
        tb.make_basis(nodes)


def test_index_out_of_range():
    basis = tb.equispaced_basis(2)
    with pytest.raises(tb.TimeBasisError):
        tb.eval(basis, 3, 0.2)


def test_degree_mismatch():
    with pytest.raises(tb.TimeBasisError):
        tb.derivative_matrix(tb.equispaced_basis(2), gauss_rule(3))


def test_policies():
    rule = radau_rule(3)
    np.testing.assert_array_equal(tb.make_time_basis("coincident", rule).basis_nodes,
                                  np.concatenate([[0.0], rule.knots]))
    np.testing.assert_allclose(tb.make_time_basis("equispaced", rule).basis_nodes,
                               [0, 1 / 3, 2 / 3, 1])
    with pytest.raises(tb.TimeBasisError):
        tb.make_time_basis("chebyshev", rule)


def random_nodes(draw, p):
    gaps = draw(st.lists(st.floats(0.05, 1.0), min_size=p, max_size=p))
    scale = draw(st.floats(0.5, 1.0))
    nodes = np.concatenate([[0.0], np.cumsum(gaps)])
    return nodes / nodes[-1] * scale


@st.composite
def bases(draw):
    p = draw(st.integers(1, 6))
    return tb.make_basis(random_nodes(draw, p))


@settings(max_examples=80, deadline=None)
@given(bases(), st.floats(0.0, 1.0))
def test_partition_of_unity_and_zero_derivative_sum(basis, t):
    # roundoff scales with the Lebesgue sum, large when extrapolating past clustered nodes
    vals, ders = basis.values([t])[0], basis.derivatives([t])[0]
    assert abs(vals.sum() - 1.0) <= 1e-14 * np.abs(vals).sum()
    assert abs(ders.sum()) <= 1e-13 * np.abs(ders).sum()


@settings(max_examples=80, deadline=None)
@given(bases())
def test_kronecker_property(basis):
    np.testing.assert_allclose(basis.values(basis.basis_nodes), np.eye(basis.degree_p + 1),
                               atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(bases(), st.data())
def test_reproduces_polynomials_of_degree_p(basis, data):
    p = basis.degree_p
    coeffs = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=p + 1, max_size=p + 1)))
    poly = np.polynomial.Polynomial(coeffs)
    t = np.linspace(0, 1, 9)
    vals = basis.values(t) @ poly(basis.basis_nodes)
    ders = basis.derivatives(t) @ poly(basis.basis_nodes)
    np.testing.assert_allclose(vals, poly(t), atol=1e-9)
    np.testing.assert_allclose(ders, poly.deriv()(t), atol=1e-7)


@pytest.mark.parametrize("p", range(1, 9))
@pytest.mark.parametrize("policy", ["coincident", "equispaced"])
def test_derivative_row_sums_vanish(p, policy):
    basis = tb.make_time_basis(policy, gauss_rule(p))
    t = np.linspace(0.0, 1.0, 41)
    assert np.max(np.abs(basis.derivatives(t).sum(axis=1))) <= 1e-12


@pytest.mark.parametrize("p", range(1, 6))
def test_row_sums_of_derivative_matrix(p):
    # sum over all p+1 basis functions of beta_k' vanishes, so B rows sum to -beta_0'
    rule = gauss_rule(p)
    basis = tb.coincident_basis(rule)
    B = tb.derivative_matrix(basis, rule).entries
    np.testing.assert_allclose(B.sum(axis=1), -basis.derivatives(rule.knots)[:, 0], atol=1e-12)
