import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charfem import fespace as fs
from charfem.mesh import DegenerateMeshError, DomainSpec, MeshSlice


def space(nodes, p=1, t=0.0):
    return fs.SliceSpace(MeshSlice(t, np.asarray(nodes, float)), p)


def problem(a=1.0, b=0.0, c=0.0, f=0.0, g_min=0.0, g_max=0.0):
    return fs.ProblemSpec(fs.constant(a), fs.constant(b), fs.constant(c), fs.constant(f),
                          lambda t: g_min, lambda t: g_max, lambda x: 0 * x)


@st.composite
def slices(draw, max_p=4):
    n = draw(st.integers(1, 8))
    gaps = np.array(draw(st.lists(st.floats(0.1, 1.0), min_size=n, max_size=n)))
    nodes = np.concatenate([[0.0], np.cumsum(gaps)])
    return space(nodes, draw(st.integers(1, max_p)))


@pytest.mark.parametrize("h", [1.0, 0.25, 3.0])
def test_single_element_mass(h):
    M = fs.mass_matrix(space([0.0, h])).toarray()
    np.testing.assert_allclose(M, [[h / 3, h / 6], [h / 6, h / 3]], atol=1e-15)


def test_single_element_h1_gram_and_stiffness():
    sp1 = space([0.0, 1.0])
    np.testing.assert_allclose(fs.h1_gram(sp1).toarray(), [[4 / 3, -5 / 6], [-5 / 6, 4 / 3]],
                               atol=1e-15)
    np.testing.assert_allclose(fs.bilinear_matrix(sp1, 0.0, problem()).toarray(),
                               [[1, -1], [-1, 1]], atol=1e-15)
    np.testing.assert_allclose(fs.bilinear_matrix(sp1, 0.0, problem(c=1.0)).toarray(),
                               (fs.stiffness_matrix(sp1) + fs.mass_matrix(sp1)).toarray(),
                               atol=1e-15)


def test_p2_mass_matches_hand_values():
    # quadratic Lagrange on [0, 1] with nodes 0, 1/2, 1
    M = fs.mass_matrix(space([0.0, 1.0], p=2)).toarray()
    np.testing.assert_allclose(M, np.array([[4, 2, -1], [2, 16, 2], [-1, 2, 4]]) / 30,
                               atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(slices())
def test_mass_row_sums_give_domain_length(sp_):
    M = fs.mass_matrix(sp_)
    assert abs(M.sum() - (sp_.mesh.nodes[-1] - sp_.mesh.nodes[0])) < 1e-12
    assert sp_.n_dofs == sp_.mesh.n_elements * sp_.degree_p + 1


@settings(max_examples=40, deadline=None)
@given(slices())
def test_mass_and_gram_spd(sp_):
    for mat in (fs.mass_matrix(sp_), fs.h1_gram(sp_)):
        dense = mat.toarray()
        np.testing.assert_allclose(dense, dense.T, atol=1e-14)
        np.linalg.cholesky(dense)


@settings(max_examples=30, deadline=None)
@given(slices(), st.integers(0, 2 ** 31))
def test_bilinear_symmetric_when_mesh_follows_convection(sp_, seed):
    rng = np.random.default_rng(seed)
    speed = rng.uniform(-2, 2)
    prob = problem(a=0.7, b=speed, c=0.3)
    x_t = np.full(sp_.mesh.n_elements + 1, speed)
    A = fs.bilinear_matrix(sp_, 0.0, prob, x_t).toarray()
    assert np.max(np.abs(A - A.T)) <= 1e-12


def test_load_vector_examples():
    sp1 = space([0.0, 1.0])
    np.testing.assert_allclose(fs.load_vector(sp1, 0.0, problem(f=1.0)), [0.5, 0.5], atol=1e-15)
    np.testing.assert_array_equal(fs.load_vector(sp1, 0.0, problem(g_max=1.0)), [0.0, 1.0])
    np.testing.assert_array_equal(fs.load_vector(space([0, 0.5, 1], p=2), 0.0, problem()),
                                  np.zeros(5))


def test_degenerate_slice_rejected():
    with pytest.raises(DegenerateMeshError):
        space([0.0, 0.5, 0.5])


def test_projection_examples():
    sp1 = space([0.0, 1.0])
    np.testing.assert_allclose(fs.l2_project(lambda x: x * x, sp1).coefficients,
                               [-1 / 6, 5 / 6], atol=1e-14)
    sp3 = space([0.0, 0.3, 0.45, 1.0], p=3)
    np.testing.assert_allclose(fs.l2_project(lambda x: 1.0 + 0 * x, sp3).coefficients, 1.0,
                               atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(slices(), st.integers(0, 2 ** 31))
def test_projection_idempotent_and_orthogonal(sp_, seed):
    rng = np.random.default_rng(seed)
    fld = fs.Field(sp_, rng.normal(size=sp_.n_dofs))
    again = fs.l2_project(fld, sp_)
    np.testing.assert_allclose(again.coefficients, fld.coefficients, atol=1e-11)
    # cross-mesh projection: residual against the target basis vanishes
    nodes = sp_.mesh.nodes
    extra = rng.uniform(nodes[0], nodes[-1], 3)
    other = space(np.unique(np.concatenate([nodes, extra])), p=2)
    proj = fs.l2_project(fld, other)
    resid = fs.mass_matrix(other) @ proj.coefficients - fs.cross_mass(sp_, other) @ fld.coefficients
    assert np.max(np.abs(resid)) <= 1e-12


def test_cross_mass_equals_mass_on_same_mesh():
    sp2 = space([0.0, 0.2, 0.9, 1.0], p=2)
    np.testing.assert_allclose(fs.cross_mass(sp2, sp2).toarray(), fs.mass_matrix(sp2).toarray(),
                               atol=1e-15)


def test_cross_mass_domain_mismatch():
    with pytest.raises(ValueError):
        fs.cross_mass(space([0.0, 1.0]), space([0.0, 2.0]))


def test_projection_between_meshes_preserves_polynomials():
    src = space([0.0, 0.37, 1.0], p=2)
    dst = space([0.0, 0.1, 0.5, 0.8, 1.0], p=3)
    fld = fs.interpolate(lambda x: 1 - 2 * x + 3 * x * x, src)
    proj = fs.l2_project(fld, dst)
    x = np.linspace(0, 1, 23)
    np.testing.assert_allclose(proj(x), 1 - 2 * x + 3 * x * x, atol=1e-12)


def test_shift_keeps_coefficients_and_scales_norm():
    delta = 0.3
    base = np.linspace(0.0, 1.0, 6)
    src, dst = space(base, p=2), space(base * (1 + delta), p=2)
    fld = fs.Field(src, np.random.default_rng(3).normal(size=src.n_dofs))
    moved = fs.shift(fld, dst)
    np.testing.assert_array_equal(moved.coefficients, fld.coefficients)
    assert abs(fs.l2_norm(moved) ** 2 - (1 + delta) * fs.l2_norm(fld) ** 2) < 1e-12
    assert fs.l2_norm(fs.shift(fld, src)) == fs.l2_norm(fld)


def test_shift_topology_mismatch():
    with pytest.raises(ValueError):
        fs.shift(fs.Field(space([0, 1]), [1.0, 2.0]), space([0, 0.5, 1]))


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_interpolation_reproduces_degree_p(p):
    sp_ = space([0.0, 0.3, 0.35, 0.8, 1.0], p=p)
    fld = fs.interpolate(lambda x: x ** p - 0.5 * x, sp_)
    x = np.linspace(0, 1, 31)
    np.testing.assert_allclose(fld(x), x ** p - 0.5 * x, atol=1e-13)
    np.testing.assert_allclose(fs.evaluate_deriv(fld, x), p * x ** (p - 1) - 0.5, atol=1e-11)
    np.testing.assert_allclose(fld(sp_.dof_coordinates), fld.coefficients, atol=1e-15)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_interpolation_converges_at_order_p_plus_one(p):
    x = np.linspace(0, 1, 1001)
    errs = []
    for n in (8, 16, 32):
        fld = fs.interpolate(np.sin, space(np.linspace(0, 1, n + 1), p=p))
        errs.append(np.max(np.abs(fld(x) - np.sin(x))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= p + 0.8)


def test_evaluate_outside_domain():
    with pytest.raises(ValueError):
        fs.interpolate(lambda x: x, space([0, 1]))(np.array([1.5]))


def test_problem_bounds():
    dom = DomainSpec(0.0, 1.0, 1.0)
    prob = problem(a=2.0, c=0.5).with_bounds(dom)
    assert prob.a_bar == 2.0 and prob.c_bar == 0.5
    with pytest.raises(ValueError):
        problem(a=0.0).with_bounds(dom)
    with pytest.raises(ValueError):
        problem(c=-1.0).with_bounds(dom)


def test_sample_table():
    sp_ = space([0.0, 0.5, 1.0], p=2)
    tab = fs.sample_table(fs.interpolate(lambda x: x * x, sp_), per_element=4)
    assert tab.shape == (9, 2)
    np.testing.assert_allclose(tab[:, 1], tab[:, 0] ** 2, atol=1e-15)


def test_field_length_checked():
    with pytest.raises(ValueError):
        fs.Field(space([0, 1]), [1.0, 2.0, 3.0])
