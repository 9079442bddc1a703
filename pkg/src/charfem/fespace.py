"""Continuous piecewise-P_p spaces on one mesh slice, and their assembly.

Element dofs sit at the Gauss-Lobatto points of each element; the global dof
of local node ``a`` in element ``e`` is ``e * p + a``, so a slice with n
elements has ``n * p + 1`` dofs.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import legendre

from ._lagrange import lagrange_matrices
from .mesh import DegenerateMeshError, MeshSlice


@lru_cache(maxsize=None)
def lobatto_points(p):
    """Gauss-Lobatto points of degree p on [0, 1]."""
    if p == 1:
        return np.array([0.0, 1.0])
    coef = np.zeros(p + 1)
    coef[p] = 1.0
    inner = np.sort(legendre.legroots(legendre.legder(coef)))
    return 0.5 * (np.concatenate([[-1.0], inner, [1.0]]) + 1.0)


@lru_cache(maxsize=None)
def gauss_points(nq):
    x, w = legendre.leggauss(nq)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _reference_tables(p, nq):
    xq, wq = gauss_points(nq)
    vals, ders = lagrange_matrices(lobatto_points(p), xq)
    return xq, wq, vals, ders


def local_basis(p, x_hat):
    """Reference shape functions and their x_hat-derivatives at ``x_hat``."""
    return lagrange_matrices(lobatto_points(p), x_hat)


def coef(fn, x, t):
    """Evaluate a coefficient ``fn(x, t)`` broadcast to the shape of ``x``."""
    if fn is None:
        return np.zeros(np.shape(x))
    return np.broadcast_to(np.asarray(fn(x, t), dtype=float), np.shape(x))


def constant(value):
    return lambda x, t: np.full(np.shape(x), float(value))


@dataclass(frozen=True)
class ExactSolution:
    u: Callable
    u_t: Callable
    u_x: Callable
    u_xx: Optional[Callable] = None


@dataclass(frozen=True)
class ProblemSpec:
    """Data of u_t - (a u_x)_x + b u_x + c u = f with Neumann flux a u_x n = g.

    Coefficients are vectorised callables ``fn(x, t)``; ``g_min`` and
    ``g_max`` are callables of t giving the flux data at each end of the
    domain (outward normal -1 and +1 respectively).
    """

    a: Callable
    b: Callable
    c: Callable
    f: Callable
    g_min: Callable
    g_max: Callable
    u0: Callable
    exact: Optional[ExactSolution] = None
    a_bar: Optional[float] = None
    c_bar: Optional[float] = None

    def with_bounds(self, domain, samples=64, seed=0):
        """Copy with a_bar, c_bar measured on a sample grid; checks a > 0, c >= 0."""
        rng = np.random.default_rng(seed)
        x = np.concatenate([np.linspace(domain.x_min, domain.x_max, samples),
                            rng.uniform(domain.x_min, domain.x_max, samples)])
        a_min, c_min = np.inf, np.inf
        for t in np.linspace(0.0, domain.t_final, 9):
            a_min = min(a_min, float(coef(self.a, x, t).min()))
            c_min = min(c_min, float(coef(self.c, x, t).min()))
        if not a_min > 0.0:
            raise ValueError(f"diffusion coefficient not positive (min {a_min})")
        if c_min < 0.0:
            raise ValueError(f"reaction coefficient negative (min {c_min})")
        return ProblemSpec(self.a, self.b, self.c, self.f, self.g_min, self.g_max,
                           self.u0, self.exact, a_min, c_min)


class SliceSpace:
    """V_h^p on one mesh slice."""

    def __init__(self, mesh: MeshSlice, degree_p: int):
        if degree_p < 1:
            raise ValueError("degree must be >= 1")
        self.mesh = mesh
        self.degree_p = degree_p
        p = degree_p
        n = mesh.n_elements
        self.n_dofs = n * p + 1
        self.element_dofs = np.arange(n)[:, None] * p + np.arange(p + 1)[None, :]
        coords = np.empty(self.n_dofs)
        coords[self.element_dofs] = mesh.nodes[:-1, None] + np.outer(mesh.sizes, lobatto_points(p))
        coords[p::p] = mesh.nodes[1:]
        self.dof_coordinates = coords

    @property
    def t(self):
        return self.mesh.t

    def same_topology(self, other):
        return self.n_dofs == other.n_dofs and self.degree_p == other.degree_p

    def quadrature(self, nq):
        """Physical points (n, nq), weights (n, nq), values (nq, p+1), x-derivatives (n, nq, p+1)."""
        xq, wq, vals, ders = _reference_tables(self.degree_p, nq)
        h = self.mesh.sizes
        if np.any(h <= 0.0):
            raise DegenerateMeshError("degenerate element in slice")
        x = self.mesh.nodes[:-1, None] + h[:, None] * xq[None, :]
        w = h[:, None] * wq[None, :]
        dx = ders[None, :, :] / h[:, None, None]
        return x, w, vals, dx

    def basis_at(self, x):
        """Element index, shape values (len(x), p+1) and x-derivatives at points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.mesh.nodes[0], self.mesh.nodes[-1]
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ValueError(f"points outside [{lo}, {hi}]")
        e, x_hat = self.mesh.locate(x)
        vals, ders = local_basis(self.degree_p, x_hat)
        return e, vals, ders / self.mesh.sizes[e][:, None]

    def _scatter(self, local):
        rows = np.repeat(self.element_dofs, self.degree_p + 1, axis=1)
        cols = np.tile(self.element_dofs, (1, self.degree_p + 1))
        return sp.csr_matrix((local.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(self.n_dofs, self.n_dofs))

    def _scatter_vector(self, local):
        out = np.zeros(self.n_dofs)
        np.add.at(out, self.element_dofs, local)
        return out


@dataclass(eq=False)
class Field:
    space: SliceSpace
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.n_dofs,):
            raise ValueError(
                f"field has {self.coefficients.shape} coefficients, space has {self.space.n_dofs} dofs")

    def __call__(self, x):
        return evaluate(self, x)


def _default_nq(space):
    return space.degree_p + 2


def mass_matrix(space):
    x, w, vals, _ = space.quadrature(_default_nq(space))
    local = np.einsum("eq,qa,qb->eab", w, vals, vals)
    return space._scatter(local)


def stiffness_matrix(space, a=None, t=0.0):
    x, w, _, dx = space.quadrature(_default_nq(space))
    aq = np.ones_like(x) if a is None else coef(a, x, t)
    local = np.einsum("eq,eqa,eqb->eab", w * aq, dx, dx)
    return space._scatter(local)


def h1_gram(space):
    return mass_matrix(space) + stiffness_matrix(space)


def _velocity_at_quad(space, x_t, nq):
    if x_t is None:
        return np.zeros((space.mesh.n_elements, nq))
    x_t = np.asarray(x_t, dtype=float)
    xq = gauss_points(nq)[0]
    return (1.0 - xq)[None, :] * x_t[:-1, None] + xq[None, :] * x_t[1:, None]


def bilinear_matrix(space, t, problem, x_t=None):
    """Matrix of A_tau(t; u, chi): rows are test functions, columns trial.

    ``x_t`` holds the mesh velocity at the mesh nodes (None for a static
    mesh); inside an element it is interpolated linearly.
    """
    nq = _default_nq(space)
    x, w, vals, dx = space.quadrature(nq)
    aq = coef(problem.a, x, t)
    drift = coef(problem.b, x, t) - _velocity_at_quad(space, x_t, nq)
    cq = coef(problem.c, x, t)
    local = (np.einsum("eq,eqa,eqb->eab", w * aq, dx, dx)
             + np.einsum("eq,qa,eqb->eab", w * drift, vals, dx)
             + np.einsum("eq,qa,qb->eab", w * cq, vals, vals))
    return space._scatter(local)


def load_vector(space, t, problem):
    x, w, vals, _ = space.quadrature(_default_nq(space))
    fq = coef(problem.f, x, t)
    out = space._scatter_vector(np.einsum("eq,qa->ea", w * fq, vals))
    out[0] += float(problem.g_min(t))
    out[-1] += float(problem.g_max(t))
    return out


def evaluate(fld, x):
    e, vals, _ = fld.space.basis_at(x)
    return np.sum(vals * fld.coefficients[fld.space.element_dofs[e]], axis=1)


def evaluate_deriv(fld, x):
    e, _, ders = fld.space.basis_at(x)
    return np.sum(ders * fld.coefficients[fld.space.element_dofs[e]], axis=1)


def interpolate(function, space, t=None):
    """Nodal interpolant; ``function`` takes x, or (x, t) when ``t`` is given."""
    x = space.dof_coordinates
    vals = function(x) if t is None else function(x, t)
    return Field(space, np.broadcast_to(np.asarray(vals, dtype=float), x.shape).copy())


def cross_mass(source, target, nq=None):
    """Matrix ``[<phi_source_j, phi_target_i>]`` of shape (target dofs, source dofs).

    Integrates exactly for polynomial products by splitting at the union of
    both meshes' breakpoints.
    """
    lo, hi = target.mesh.nodes[0], target.mesh.nodes[-1]
    if not (np.isclose(source.mesh.nodes[0], lo) and np.isclose(source.mesh.nodes[-1], hi)):
        raise ValueError("source and target slices cover different domains")
    nq = nq or (source.degree_p + target.degree_p) // 2 + 1
    breaks = np.unique(np.concatenate([source.mesh.nodes, target.mesh.nodes]))
    breaks = breaks[(breaks >= lo) & (breaks <= hi)]
    xq, wq = gauss_points(nq)
    width = np.diff(breaks)
    keep = width > 0.0
    x = (breaks[:-1, None] + width[:, None] * xq[None, :])[keep].ravel()
    w = (width[:, None] * wq[None, :])[keep].ravel()
    et, vt, _ = target.basis_at(x)
    es, vs, _ = source.basis_at(x)
    rows = np.repeat(target.element_dofs[et], source.degree_p + 1, axis=1)
    cols = np.tile(source.element_dofs[es], (1, target.degree_p + 1))
    vals = (w[:, None, None] * vt[:, :, None] * vs[:, None, :]).reshape(len(x), -1)
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(target.n_dofs, source.n_dofs))


def moments(function, space, nq=None):
    """Vector ``[<function, phi_i>]`` by Gauss quadrature on each element."""
    nq = nq or space.degree_p + 3
    x, w, vals, _ = space.quadrature(nq)
    fx = np.broadcast_to(np.asarray(function(x), dtype=float), x.shape)
    return space._scatter_vector(np.einsum("eq,qa->ea", w * fx, vals))


def l2_project(source, target):
    """L2 projection of a Field (any mesh) or a callable of x onto ``target``."""
    if isinstance(source, Field):
        rhs = cross_mass(source.space, target) @ source.coefficients
    else:
        rhs = moments(source, target)
    mass = mass_matrix(target).tocsc()
    coeffs = spla.splu(mass).solve(rhs)
    return Field(target, coeffs)


def shift(fld, target):
    """Carry a field to another slice of the same partition, keeping its coefficients."""
    if not fld.space.same_topology(target):
        raise ValueError(
            f"shift needs matching topology: {fld.space.n_dofs} vs {target.n_dofs} dofs")
    return Field(target, fld.coefficients.copy())


def l2_norm(fld):
    c = fld.coefficients
    return float(np.sqrt(max(c @ (mass_matrix(fld.space) @ c), 0.0)))


def h1_norm(fld):
    c = fld.coefficients
    return float(np.sqrt(max(c @ (h1_gram(fld.space) @ c), 0.0)))


def sample_table(fld, per_element=10):
    """Array of (x, value) rows at ``per_element`` equispaced points per element."""
    nodes = fld.space.mesh.nodes
    x_hat = np.linspace(0.0, 1.0, per_element, endpoint=False)
    x = (nodes[:-1, None] + np.diff(nodes)[:, None] * x_hat[None, :]).ravel()
    x = np.append(x, nodes[-1])
    return np.column_stack([x, evaluate(fld, x)])
