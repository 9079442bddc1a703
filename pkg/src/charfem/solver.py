"""Collocation-in-time moving finite element solver.

On partition i the solution is ``u_h = sum_k beta_k(t_hat) phi_k`` with
``phi_k`` the slice field at time-basis node k, its coefficients shared by
every slice of the partition. Collocating the characteristic weak form at the
p quadrature knots gives, for j = 1..p,

    sum_k [beta_k'(t_j) / dt M_j + beta_k(t_j) K_j] c_k = F_j

with M_j, K_j the mass and A_tau matrices on the slice at t_ij. ``c_0`` is
known (the projected end state of the previous partition), so its column
moves to the right side and the p remaining blocks are solved together.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fespace as fs
from .mesh import (DegenerateMeshError, MeshSlice, RegularityReport, build_trajectories,
                   reconfigure, regularity, slice_at)


class SolverError(RuntimeError):
    """A partition could not be assembled or solved."""

    def __init__(self, index, cause):
        super().__init__(f"partition {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(eq=False)
class PartitionSystem:
    partition: object
    rule: object
    basis: object
    c0: fs.Field
    matrix: sp.csr_matrix
    rhs: np.ndarray
    spaces: list
    masses: list
    operators: list

    @property
    def n_dofs(self):
        return self.c0.space.n_dofs


@dataclass
class StepReport:
    index: int
    residual: float
    regularity: RegularityReport
    condition_estimate: float
    jump_residual: float = 0.0

    header = ("partition", "t_start", "t_end", "residual", "condition_estimate", "mu",
              "kappa", "min_element", "det_ratio_min", "det_ratio_max", "jump_residual")


@dataclass(eq=False)
class PartitionSolution:
    """Solved partition: ``coeffs[k]`` are the slice coefficients at basis node k."""

    partition: object
    rule: object
    basis: object
    coeffs: np.ndarray

    @property
    def degree_p(self):
        return self.partition.degree_p

    def space_at(self, t):
        return fs.SliceSpace(slice_at(self.partition, t), self.degree_p)

    def coefficients_at(self, t):
        return self.basis.combine(self.partition.t_hat(t), self.coeffs)

    def field_at(self, t):
        return fs.Field(self.space_at(t), self.coefficients_at(t))

    def collocation_times(self):
        return self.rule.times(self.partition.t_start, self.partition.dt)

    def initial_field(self):
        return fs.Field(self.space_at(self.partition.t_start), self.coeffs[0])

    def end_field(self):
        return self.field_at(self.partition.t_end)


@dataclass
class SpaceTimeSolution:
    partitions: List[PartitionSolution] = field(default_factory=list)
    reports: List[StepReport] = field(default_factory=list)
    jump_residuals: List[float] = field(default_factory=list)

    def locate(self, t):
        for sol in self.partitions:
            if t <= sol.partition.t_end:
                return sol
        return self.partitions[-1]

    def field_at(self, t):
        """Field at time t (left limit at partition ends, t = 0 gives the initial state)."""
        sol = self.locate(t)
        return sol.field_at(max(t, sol.partition.t_start))


def initial_field(problem, space):
    return fs.l2_project(problem.u0, space)


def assemble_partition(partition, problem, rule, basis, c0, dt_ceiling=None):
    if dt_ceiling is not None and partition.dt > dt_ceiling:
        raise SolverError(partition.index,
                          f"dt={partition.dt:.3e} exceeds ceiling {dt_ceiling:.3e}")
    if rule.degree_p != basis.degree_p or basis.degree_p != partition.degree_p:
        raise ValueError("rule, basis and partition degrees differ")
    p = rule.degree_p
    dt = partition.dt
    vals = basis.values(rule.knots)
    ders = basis.derivatives(rule.knots) / dt
    blocks = [[None] * p for _ in range(p)]
    rhs = []
    spaces, masses, operators = [], [], []
    for j, t in enumerate(rule.times(partition.t_start, dt)):
        space = fs.SliceSpace(slice_at(partition, t), p)
        if space.n_dofs != c0.space.n_dofs:
            raise ValueError("initial field does not match the partition topology")
        mass = fs.mass_matrix(space)
        op = fs.bilinear_matrix(space, t, problem, partition.velocities(t))
        for k in range(1, p + 1):
            blocks[j][k - 1] = ders[j, k] * mass + vals[j, k] * op
        rhs.append(fs.load_vector(space, t, problem)
                   - (ders[j, 0] * mass + vals[j, 0] * op) @ c0.coefficients)
        spaces.append(space)
        masses.append(mass)
        operators.append(op)
    matrix = sp.bmat(blocks, format="csr")
    return PartitionSystem(partition, rule, basis, c0, matrix, np.concatenate(rhs),
                           spaces, masses, operators)


def _condition_estimate(matrix, lu):
    # t=1 keeps the estimator deterministic (no random starting columns)
    n = matrix.shape[0]
    inv = spla.LinearOperator((n, n), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"),
                              dtype=float)
    return float(spla.norm(matrix, 1) * spla.onenormest(inv, t=1))


def solve_partition(system, estimate_condition=False, tol=1e-9):
    """Solve the collocation system.

    Returns the fields at time-basis nodes 1..p, the relative residual and a
    1-norm condition estimate (NaN unless requested).
    """
    index = system.partition.index
    matrix = system.matrix.tocsc()
    try:
        lu = spla.splu(matrix)
    except RuntimeError as err:
        raise SolverError(index, f"singular collocation system ({err})") from err
    sol = lu.solve(system.rhs)
    if not np.all(np.isfinite(sol)):
        raise SolverError(index, "non-finite solution")
    scale = max(np.linalg.norm(system.rhs), np.linalg.norm(matrix @ sol), 1e-300)
    residual = float(np.linalg.norm(matrix @ sol - system.rhs) / scale)
    if np.linalg.norm(system.rhs) == 0.0 and np.linalg.norm(sol) == 0.0:
        residual = 0.0
    if residual > tol:
        raise SolverError(index, f"relative residual {residual:.3e} above {tol:.1e}")
    cond = _condition_estimate(matrix, lu) if estimate_condition else float("nan")
    n = system.n_dofs
    part = system.partition
    fields = [fs.Field(fs.SliceSpace(slice_at(part, part.time_of(z)), part.degree_p),
                       sol[k * n:(k + 1) * n])
              for k, z in enumerate(system.basis.basis_nodes[1:])]
    return fields, residual, cond


def jump_residual(before, after):
    """max_i |<u(t+) - u(t-), phi_i>| over the basis of the new slice."""
    r = (fs.mass_matrix(after.space) @ after.coefficients
         - fs.cross_mass(before.space, after.space) @ before.coefficients)
    return float(np.max(np.abs(r)))


def _build_partition(motion, start, interval, basis, index, knots):
    if hasattr(motion, "build"):
        return motion.build(start, interval, basis, index=index, check_knots=knots)
    w = motion if motion is not None else (lambda x, t: np.zeros_like(x))
    return build_trajectories(start, interval, w, basis, index=index, check_knots=knots)


def _next_slice(policy, index, end):
    if policy is None or policy == "keep":
        return reconfigure(end, "keep")
    if isinstance(policy, tuple):
        kind, arg = policy
        if kind == "uniform":
            return reconfigure(end, "uniform", n=arg)
        return reconfigure(end, "user", positions=arg)
    result = policy(index, end)
    return reconfigure(end, "keep") if result is None else result


def build_mesh_sequence(initial_mesh, time_grid, motion, rule, basis, reconfiguration=None):
    """Mesh partitions the march would use, without solving (for plotting)."""
    parts = []
    start = MeshSlice(time_grid.breakpoints[0], initial_mesh.nodes)
    for i in range(1, time_grid.m + 1):
        interval = time_grid.interval(i)
        try:
            if parts:
                start = _next_slice(reconfiguration, i, slice_at(parts[-1], interval[0]))
            parts.append(_build_partition(motion, start, interval, basis, i, tuple(rule.knots)))
        except (DegenerateMeshError, ValueError) as err:
            raise SolverError(i, err) from err
    return parts


def run(initial_mesh, time_grid, problem, motion, rule, basis, reconfiguration=None,
        dt_ceiling=None, estimate_condition=False):
    """March the method over every partition of ``time_grid``.

    ``motion`` is either a velocity field ``w(x, t)`` or an object with a
    ``build(start, interval, basis, index=, check_knots=)`` method returning a
    TimePartition. ``reconfiguration`` is ``None``/``"keep"``,
    ``("uniform", n)``, ``("user", positions)`` or a callable
    ``(i, end_slice) -> MeshSlice``; it is applied before partitions 2..m.
    """
    result = SpaceTimeSolution()
    start = MeshSlice(time_grid.breakpoints[0], initial_mesh.nodes)
    previous_end = None
    for i in range(1, time_grid.m + 1):
        interval = time_grid.interval(i)
        try:
            if i > 1:
                start = _next_slice(reconfiguration, i, slice_at(result.partitions[-1].partition,
                                                                 interval[0]))
            partition = _build_partition(motion, start, interval, basis, i, tuple(rule.knots))
            space0 = fs.SliceSpace(MeshSlice(interval[0], partition.node_values[0]), rule.degree_p)
            if previous_end is None:
                c0 = initial_field(problem, space0)
                jres = 0.0
            elif previous_end.space.mesh.same_nodes(space0.mesh):
                c0 = fs.Field(space0, previous_end.coefficients.copy())
                jres = 0.0
            else:
                c0 = fs.l2_project(previous_end, space0)
                jres = jump_residual(previous_end, c0)
            system = assemble_partition(partition, problem, rule, basis, c0, dt_ceiling)
            fields, residual, cond = solve_partition(system, estimate_condition)
            check = partition.time_of(np.unique(np.concatenate([basis.basis_nodes, rule.knots])))
            reg = regularity(partition, check, problem.b)
        except SolverError:
            raise
        except (DegenerateMeshError, ValueError, np.linalg.LinAlgError) as err:
            raise SolverError(i, err) from err
        coeffs = np.vstack([c0.coefficients] + [f.coefficients for f in fields])
        sol = PartitionSolution(partition, rule, basis, coeffs)
        result.partitions.append(sol)
        result.reports.append(StepReport(i, residual, reg, cond, jres))
        result.jump_residuals.append(jres)
        previous_end = sol.end_field()
    return result


def report_rows(solution):
    rows = []
    for rep, sol in zip(solution.reports, solution.partitions):
        reg = rep.regularity
        rows.append((rep.index, sol.partition.t_start, sol.partition.t_end, rep.residual,
                     rep.condition_estimate, reg.mu_estimate, reg.kappa_estimate,
                     reg.min_element, reg.det_ratio_range[0], reg.det_ratio_range[1],
                     rep.jump_residual))
    return rows


def snapshot_rows(solution, per_element=4):
    """(t, x, u) samples at every partition end (and t = 0)."""
    rows = []
    first = solution.partitions[0]
    times = [(first, first.partition.t_start)]
    times += [(sol, sol.partition.t_end) for sol in solution.partitions]
    for sol, t in times:
        tab = fs.sample_table(sol.field_at(t), per_element)
        rows.extend((t, x, u) for x, u in tab)
    return rows
