"""Moving 1D meshes: degree-p node trajectories on each time partition.

Inside a partition ``(t0, t1]`` every node ``x_k(t)`` is a polynomial of
degree p in time, stored by its values at the time-basis nodes. Elements are
indexed from 0, element ``e`` spanning ``[x_e(t), x_{e+1}(t)]``. The first and
last nodes never move.
"""
from dataclasses import dataclass

import numpy as np


class DegenerateMeshError(ValueError):
    """Element length became non-positive, or nodes crossed."""


@dataclass(frozen=True)
class DomainSpec:
    x_min: float
    x_max: float
    t_final: float

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"empty domain [{self.x_min}, {self.x_max}]")
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")

    @property
    def length(self):
        return self.x_max - self.x_min


@dataclass(frozen=True, eq=False)
class TimeGrid:
    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or len(bp) < 2 or bp[0] != 0.0:
            raise ValueError("time grid must start at 0 and have at least one interval")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("time breakpoints must be strictly increasing")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def uniform(cls, t_final, m):
        return cls(np.linspace(0.0, t_final, m + 1))

    @property
    def m(self):
        return len(self.breakpoints) - 1

    def interval(self, i):
        """Endpoints of partition ``i`` (1-based, as t_{i-1}, t_i)."""
        return float(self.breakpoints[i - 1]), float(self.breakpoints[i])

    def dt(self, i):
        t0, t1 = self.interval(i)
        return t1 - t0


@dataclass(frozen=True, eq=False)
class MeshSlice:
    t: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise DegenerateMeshError("a slice needs at least one element")
        if np.any(np.diff(nodes) <= 0.0):
            bad = int(np.argmin(np.diff(nodes)))
            raise DegenerateMeshError(
                f"non-monotone nodes at t={self.t}: element {bad} has length "
                f"{nodes[bad + 1] - nodes[bad]:.3e}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self):
        return len(self.nodes) - 1

    @property
    def sizes(self):
        return np.diff(self.nodes)

    @property
    def min_element(self):
        return float(self.sizes.min())

    def locate(self, x):
        """Element index and local coordinate for each physical point."""
        x = np.asarray(x, dtype=float)
        e = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.n_elements - 1)
        x_hat = (x - self.nodes[e]) / self.sizes[e]
        return e, x_hat

    def same_nodes(self, other):
        return len(self.nodes) == len(other.nodes) and np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True, eq=False)
class NodeTrajectory:
    """One node path ``x_k(t)`` in the time Lagrange basis of its partition."""

    values_at_basis_nodes: np.ndarray
    basis: object
    t_start: float
    dt: float

    def __call__(self, t):
        return float(self.basis.combine((t - self.t_start) / self.dt, self.values_at_basis_nodes))

    def derivative(self, t):
        return float(self.basis.combine_deriv((t - self.t_start) / self.dt,
                                              self.values_at_basis_nodes)) / self.dt


@dataclass(frozen=True, eq=False)
class TimePartition:
    """Mesh motion on one time partition.

    ``node_values[l, k]`` is the position of node k at basis node l.
    """

    index: int
    t_start: float
    t_end: float
    basis: object
    node_values: np.ndarray
    check_knots: tuple = ()
    density: int = 10

    def __post_init__(self):
        vals = np.array(self.node_values, dtype=float)
        if vals.shape[0] != self.basis.degree_p + 1:
            raise ValueError(
                f"need {self.basis.degree_p + 1} rows of node positions, got {vals.shape[0]}")
        if not self.t_end > self.t_start:
            raise ValueError("partition has non-positive length")
        for col in (0, -1):
            if np.any(vals[:, col] != vals[0, col]):
                raise ValueError("boundary nodes must stay fixed")
        vals.setflags(write=False)
        object.__setattr__(self, "node_values", vals)
        # displacements from the start slice; static nodes then evaluate exactly
        object.__setattr__(self, "_offsets", vals - vals[0])
        self.validate()

    @property
    def dt(self):
        return self.t_end - self.t_start

    @property
    def degree_p(self):
        return self.basis.degree_p

    @property
    def n_elements(self):
        return self.node_values.shape[1] - 1

    def t_hat(self, t):
        return (t - self.t_start) / self.dt

    def time_of(self, t_hat):
        return self.t_start + t_hat * self.dt

    def positions(self, t):
        return self.node_values[0] + self.basis.combine(self.t_hat(t), self._offsets)

    def velocities(self, t):
        return self.basis.combine_deriv(self.t_hat(t), self._offsets) / self.dt

    def positions_at(self, t_hat):
        """Node positions at an array of reference times, shape (len(t_hat), n + 1)."""
        return self.node_values[0] + self.basis.values(t_hat) @ self._offsets

    @property
    def trajectories(self):
        return [NodeTrajectory(self.node_values[:, k], self.basis, self.t_start, self.dt)
                for k in range(self.node_values.shape[1])]

    def check_points(self):
        """Reference times at which non-degeneracy is enforced."""
        dense = np.linspace(0.0, 1.0, self.density * self.degree_p)
        pts = np.concatenate([self.basis.basis_nodes, np.asarray(self.check_knots, float),
                              dense, [1.0]])
        return np.unique(pts)

    def validate(self):
        pos = self.positions_at(self.check_points())
        lengths = np.diff(pos, axis=1)
        if np.any(lengths <= 0.0):
            row, e = np.unravel_index(np.argmin(lengths), lengths.shape)
            t = self.time_of(self.check_points()[row])
            raise DegenerateMeshError(
                f"element {e} degenerates near t={t:.6g} "
                f"(length {lengths[row, e]:.3e})")


@dataclass(frozen=True)
class RegularityReport:
    mu_estimate: float
    kappa_estimate: float
    min_element: float
    det_ratio_range: tuple


def _check_time(partition, t):
    tol = 1e-12 * max(1.0, abs(partition.t_end))
    if not partition.t_start - tol <= t <= partition.t_end + tol:
        raise ValueError(f"t={t} outside partition [{partition.t_start}, {partition.t_end}]")


def slice_at(partition, t):
    _check_time(partition, t)
    return MeshSlice(float(t), partition.positions(t))


def _element_ends(partition, e, t):
    if not 0 <= e < partition.n_elements:
        raise IndexError(f"element {e} outside 0..{partition.n_elements - 1}")
    pos = partition.positions(t)
    left, right = pos[e], pos[e + 1]
    if right - left <= 0.0:
        raise DegenerateMeshError(f"element {e} degenerate at t={t}")
    return left, right


def isoparametric(partition, e, x_hat, t_hat):
    t = partition.time_of(t_hat)
    left, right = _element_ends(partition, e, t)
    return left + x_hat * (right - left), t


def inverse_isoparametric(partition, e, x, t):
    left, right = _element_ends(partition, e, t)
    return (x - left) / (right - left), partition.t_hat(t)


def mesh_velocity(partition, e, x_hat, t):
    _element_ends(partition, e, t)
    v = partition.velocities(t)
    return (1.0 - x_hat) * v[e] + x_hat * v[e + 1]


def velocity_at(partition, x, t):
    """Mesh velocity at physical points of the slice at time t."""
    e, x_hat = MeshSlice(t, partition.positions(t)).locate(x)
    v = partition.velocities(t)
    return (1.0 - x_hat) * v[e] + x_hat * v[e + 1]


def _eval_field(fn, x, t):
    if fn is None:
        return np.zeros_like(x)
    return np.broadcast_to(np.asarray(fn(x, t), dtype=float), np.shape(x))


def regularity(partition, check_times, b=None, n_sample=5):
    """Measure the space-time regularity constants of a partition.

    In 1D the element evolution rate is
    ``H_e(t) = (dx_e(t) / dx_e(t_start) - 1) / dt`` and ``mu`` is its largest
    magnitude. ``kappa`` is the largest ``|b - x_t|`` over ``n_sample``
    points per element at each check time.
    """
    base = np.diff(partition.node_values[0])
    x_hat = np.linspace(0.0, 1.0, n_sample)
    mu = kappa = 0.0
    min_el = np.inf
    lo, hi = np.inf, -np.inf
    for t in check_times:
        _check_time(partition, t)
        pos = partition.positions(t)
        sizes = np.diff(pos)
        if np.any(sizes <= 0.0):
            raise DegenerateMeshError(f"partition {partition.index} degenerate at t={t}")
        ratio = sizes / base
        mu = max(mu, float(np.max(np.abs(ratio - 1.0))) / partition.dt)
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
        min_el = min(min_el, float(sizes.min()))
        v = partition.velocities(t)
        xs = pos[:-1, None] + x_hat[None, :] * sizes[:, None]
        xt = (1.0 - x_hat)[None, :] * v[:-1, None] + x_hat[None, :] * v[1:, None]
        kappa = max(kappa, float(np.max(np.abs(_eval_field(b, xs, t) - xt))))
    return RegularityReport(mu, kappa, min_el, (lo, hi))


def _rk4_advance(x, t, t_next, w, substeps):
    h = (t_next - t) / substeps
    for _ in range(substeps):
        k1 = w(x, t)
        k2 = w(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = w(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = w(x + h * k3, t + h)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + h
    return x


def build_trajectories(initial, interval, w, basis, index=1, check_knots=(), substeps=8):
    """Advect the nodes of ``initial`` with velocity ``w(x, t)`` over ``interval``.

    Node positions at the time-basis nodes come from classical RK4 with
    ``substeps`` steps per basis-node gap; the degree-p trajectory is their
    Lagrange interpolant. Boundary nodes are held fixed.
    """
    t0, t1 = interval
    dt = t1 - t0
    times = t0 + basis.basis_nodes * dt
    interior = np.array(initial.nodes[1:-1], dtype=float)

    def vel(x, t):
        return np.broadcast_to(np.asarray(w(x, t), dtype=float), x.shape)

    rows = [initial.nodes.copy()]
    x = interior
    for ta, tb in zip(times[:-1], times[1:]):
        x = _rk4_advance(x, ta, tb, vel, substeps)
        rows.append(np.concatenate([[initial.nodes[0]], x, [initial.nodes[-1]]]))
    return TimePartition(index, t0, t1, basis, np.array(rows), tuple(check_knots))


def partition_from_paths(initial, interval, path, basis, index=1, check_knots=()):
    """Partition whose node k follows ``path(x_k(t0), t)``; boundaries fixed.

    ``path`` is evaluated at the time-basis nodes only, so paths that are
    polynomials of degree <= p in t are represented exactly.
    """
    t0, t1 = interval
    times = t0 + basis.basis_nodes * (t1 - t0)
    x0 = np.asarray(initial.nodes, dtype=float)
    rows = []
    for t in times:
        row = np.array(path(x0, t), dtype=float)
        row[0], row[-1] = x0[0], x0[-1]
        rows.append(row)
    return TimePartition(index, t0, t1, basis, np.array(rows), tuple(check_knots))


def reconfigure(previous_end, strategy="keep", n=None, positions=None, t=None):
    """Initial slice of the next partition.

    ``keep`` reuses the node positions, ``uniform`` lays out ``n`` equal
    elements on the same interval, ``user`` takes explicit ``positions``.
    """
    t = previous_end.t if t is None else t
    if strategy == "keep":
        return MeshSlice(t, previous_end.nodes)
    if strategy == "uniform":
        if n is None or n < 1:
            raise ValueError("uniform reconfiguration needs n >= 1")
        return MeshSlice(t, np.linspace(previous_end.nodes[0], previous_end.nodes[-1], n + 1))
    if strategy == "user":
        pos = np.asarray(positions, dtype=float)
        if pos[0] != previous_end.nodes[0] or pos[-1] != previous_end.nodes[-1]:
            raise ValueError("user positions must keep the domain boundary")
        return MeshSlice(t, pos)
    raise ValueError(f"unknown reconfiguration strategy {strategy!r}")


def uniform_slice(domain, n, t=0.0):
    return MeshSlice(t, np.linspace(domain.x_min, domain.x_max, n + 1))


def snapshot_rows(partition, samples=20):
    """Rows ``(t, x_0, ..., x_n)`` at ``samples`` equispaced times of the partition."""
    ts = np.linspace(partition.t_start, partition.t_end, samples)
    pos = partition.positions_at(partition.t_hat(ts))
    return np.column_stack([ts, pos])
