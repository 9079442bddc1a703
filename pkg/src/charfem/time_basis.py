"""Lagrange time basis on the reference interval and its derivative matrix."""
from dataclasses import dataclass

import numpy as np

from ._lagrange import barycentric_weights, lagrange_matrices


class TimeBasisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeBasis:
    """Lagrange basis beta_0..beta_p on nodes 0 = z_0 < z_1 < ... < z_p <= 1."""

    degree_p: int
    basis_nodes: np.ndarray
    bary_weights: np.ndarray

    def values(self, t_hat):
        """Matrix ``[beta_k(t)]`` of shape (len(t_hat), p + 1)."""
        return lagrange_matrices(self.basis_nodes, t_hat, self.bary_weights)[0]

    def derivatives(self, t_hat):
        """Matrix ``[beta_k'(t)]`` of shape (len(t_hat), p + 1)."""
        return lagrange_matrices(self.basis_nodes, t_hat, self.bary_weights)[1]

    def combine(self, t_hat, coeffs):
        """Evaluate ``sum_k beta_k(t_hat) coeffs[k]`` for stacked coefficient arrays."""
        return np.tensordot(self.values([t_hat])[0], coeffs, axes=(0, 0))

    def combine_deriv(self, t_hat, coeffs):
        return np.tensordot(self.derivatives([t_hat])[0], coeffs, axes=(0, 0))


@dataclass(frozen=True, eq=False)
class DerivativeMatrix:
    entries: np.ndarray
    condition_estimate: float


def make_basis(nodes):
    nodes = np.array(nodes, dtype=float)
    if nodes.ndim != 1 or len(nodes) < 2:
        raise TimeBasisError("need at least two basis nodes")
    if nodes[0] != 0.0:
        raise TimeBasisError(f"first basis node must be 0, got {nodes[0]}")
    if np.any(np.diff(nodes) <= 0.0):
        raise TimeBasisError(f"basis nodes not strictly increasing: {nodes}")
    if nodes[-1] > 1.0:
        raise TimeBasisError(f"last basis node {nodes[-1]} exceeds 1")
    nodes.setflags(write=False)
    weights = barycentric_weights(nodes)
    weights.setflags(write=False)
    return TimeBasis(len(nodes) - 1, nodes, weights)


def coincident_basis(rule):
    """Basis on {0} plus the collocation knots of ``rule``."""
    return make_basis(np.concatenate([[0.0], rule.knots]))


def equispaced_basis(p):
    return make_basis(np.linspace(0.0, 1.0, p + 1))


def make_time_basis(policy, rule):
    if policy == "coincident":
        return coincident_basis(rule)
    if policy == "equispaced":
        return equispaced_basis(rule.degree_p)
    raise TimeBasisError(f"unknown basis-node policy {policy!r}")


def _check_index(basis, k):
    if not 0 <= k <= basis.degree_p:
        raise TimeBasisError(f"basis index {k} outside 0..{basis.degree_p}")


def eval(basis, k, t_hat):
    _check_index(basis, k)
    return float(basis.values([t_hat])[0, k])


def eval_deriv(basis, k, t_hat):
    _check_index(basis, k)
    return float(basis.derivatives([t_hat])[0, k])


def derivative_matrix(basis, rule):
    """B[j, k] = beta_k'(t_j) for j, k = 1..p (the k = 0 column is dropped)."""
    if rule.degree_p != basis.degree_p:
        raise TimeBasisError(
            f"rule degree {rule.degree_p} != basis degree {basis.degree_p}")
    entries = basis.derivatives(rule.knots)[:, 1:]
    cond = np.linalg.cond(entries)
    if not np.isfinite(cond) or cond > 1e12:
        raise TimeBasisError(f"derivative matrix is numerically singular (cond={cond:.3e})")
    entries.setflags(write=False)
    return DerivativeMatrix(entries, float(cond))
