"""Slice norms, characteristic derivatives and the mesh-dependent energy norm.

The energy norm of a space-time function e is

    |||e|||^2 = max_{i,j} ||e(t_ij)||_0^2
                + sum_i dt_i Q_i( ||e_tau||_{-1,h}^2 + ||e||_1^2 )

where the max also covers the initial slice t = 0, e_tau is the derivative
along the mesh trajectories, and ||.||_{-1,h} is the dual norm of H^1
restricted to the finite element space of the slice.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import fespace as fs
from .mesh import velocity_at
from .solver import PartitionSolution

EXACT_TOL = 1e-13


@dataclass(frozen=True)
class EnergyComponents:
    energy: float
    max_l2: float
    h1_term: float
    neg_term: float


@dataclass(frozen=True)
class ErrorReport:
    """Energy-norm errors of the discrete solution and of the interpolant.

    ``h1_term`` and ``neg_term`` are the aggregated squared contributions,
    so ``energy_error**2 == max_l2**2 + h1_term + neg_term``. The
    interpolant only bounds the best approximation from above, so the ratio
    overestimates the quasi-optimality constant; it is NaN when the
    interpolant is exact.
    """

    energy_error: float
    max_l2: float
    h1_term: float
    neg_term: float
    interpolant_energy_error: float
    quasi_optimality_ratio: float

    header = ("energy_err", "max_l2", "h1_term", "neg_term", "interp_energy_err", "ratio")

    @property
    def exact(self):
        return self.interpolant_energy_error <= EXACT_TOL and self.energy_error <= 1e-9

    def row(self):
        return (self.energy_error, self.max_l2, self.h1_term, self.neg_term,
                self.interpolant_energy_error, self.quasi_optimality_ratio)


def negative_norm(space, moments, return_supremizer=False):
    """sup over chi in the slice space of |<v, chi>| / ||chi||_1, given <v, phi_i>.

    Equal to sqrt(r^T G^-1 r) with G the H^1 Gram matrix; the supremizer is
    the field with coefficients G^-1 r.
    """
    r = np.asarray(moments, dtype=float)
    if r.shape != (space.n_dofs,):
        raise ValueError("moment vector does not match the space")
    gram = fs.h1_gram(space).tocsc()
    z = spla.splu(gram).solve(r)
    value = float(np.sqrt(max(r @ z, 0.0)))
    if return_supremizer:
        return value, fs.Field(space, z)
    return value


def discrete_characteristic_derivative(part, j):
    """Field (1/dt) sum_k beta_k'(t_j) c_k on the slice at collocation node j (1-based)."""
    p = part.degree_p
    if not 1 <= j <= p:
        raise IndexError(f"collocation index {j} outside 1..{p}")
    t_hat = part.rule.knots[j - 1]
    coeffs = part.basis.combine_deriv(t_hat, part.coeffs) / part.partition.dt
    return fs.Field(part.space_at(part.partition.time_of(t_hat)), coeffs)


def exact_characteristic_derivative(problem, partition, x, t):
    """u_t + x_t u_x along the mesh trajectories of ``partition``."""
    ex = problem.exact
    if ex is None:
        raise ValueError("problem has no exact solution")
    x = np.asarray(x, dtype=float)
    return fs.coef(ex.u_t, x, t) + velocity_at(partition, x, t) * fs.coef(ex.u_x, x, t)


def _slice_terms(part, t, coeffs, dcoeffs, exact, nq):
    """Squared L2, H1 and negative norms of (exact - discrete) on the slice at t."""
    space = part.space_at(t)
    x, w, vals, dx = space.quadrature(nq)
    local = coeffs[space.element_dofs]
    uh = np.einsum("qa,ea->eq", vals, local)
    uh_x = np.einsum("eqa,ea->eq", dx, local)
    if exact is None:
        u = u_x = utau = np.zeros_like(x)
    else:
        u = fs.coef(exact.u, x, t)
        u_x = fs.coef(exact.u_x, x, t)
        vel = part.partition.velocities(t)
        xq = fs.gauss_points(nq)[0]
        xt = (1.0 - xq)[None, :] * vel[:-1, None] + xq[None, :] * vel[1:, None]
        utau = fs.coef(exact.u_t, x, t) + xt * u_x
    e, e_x = u - uh, u_x - uh_x
    l2sq = float(np.sum(w * e * e))
    h1sq = l2sq + float(np.sum(w * e_x * e_x))
    if dcoeffs is None:
        return l2sq, h1sq, 0.0
    mom = space._scatter_vector(np.einsum("eq,qa->ea", w * utau, vals))
    mom -= fs.mass_matrix(space) @ dcoeffs
    neg = negative_norm(space, mom)
    return l2sq, h1sq, neg * neg


def energy_norm(parts, exact=None, nq=None):
    """Energy norm of ``exact - u_h`` (or of u_h itself when ``exact`` is None).

    ``parts`` is a sequence of PartitionSolution objects describing a
    space-time discrete function.
    """
    max_l2sq = h1_term = neg_term = 0.0
    first = parts[0]
    p = first.degree_p
    nq = nq or p + 3
    l2sq, _, _ = _slice_terms(first, first.partition.t_start, first.coeffs[0], None, exact, nq)
    max_l2sq = l2sq
    for part in parts:
        dt = part.partition.dt
        for j, (t_hat, wj) in enumerate(zip(part.rule.knots, part.rule.weights), start=1):
            t = part.partition.time_of(t_hat)
            coeffs = part.basis.combine(t_hat, part.coeffs)
            dcoeffs = part.basis.combine_deriv(t_hat, part.coeffs) / dt
            l2sq, h1sq, negsq = _slice_terms(part, t, coeffs, dcoeffs, exact, nq)
            max_l2sq = max(max_l2sq, l2sq)
            h1_term += dt * wj * h1sq
            neg_term += dt * wj * negsq
    energy = np.sqrt(max_l2sq + h1_term + neg_term)
    return EnergyComponents(float(energy), float(np.sqrt(max_l2sq)), h1_term, neg_term)


def interpolant(parts, exact):
    """Space-time interpolant: nodal interpolation of u at every time-basis node."""
    out = []
    for part in parts:
        rows = []
        for z in part.basis.basis_nodes:
            t = part.partition.time_of(z)
            rows.append(fs.interpolate(exact.u, part.space_at(t), t=t).coefficients)
        out.append(PartitionSolution(part.partition, part.rule, part.basis, np.array(rows)))
    return out


def error_report(solution, problem):
    """Energy errors of u_h and of the interpolant of u, and their ratio."""
    if problem.exact is None:
        raise ValueError("error report needs an exact solution")
    parts = solution.partitions if hasattr(solution, "partitions") else list(solution)
    err = energy_norm(parts, problem.exact)
    ierr = energy_norm(interpolant(parts, problem.exact), problem.exact)
    ratio = err.energy / ierr.energy if ierr.energy > EXACT_TOL else float("nan")
    return ErrorReport(err.energy, err.max_l2, err.h1_term, err.neg_term, ierr.energy, ratio)
