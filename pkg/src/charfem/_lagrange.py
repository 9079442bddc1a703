"""Lagrange interpolation matrices in the first barycentric (modified Lagrange) form."""
import numpy as np


def barycentric_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrices(nodes, points, weights=None):
    """Values and first derivatives of the Lagrange basis on ``nodes`` at ``points``.

    Returns two arrays of shape ``(len(points), len(nodes))``. Products are
    formed directly (no division by ``t - node``) so evaluation at the nodes
    themselves is exact.
    """
    nodes = np.asarray(nodes, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    if weights is None:
        weights = barycentric_weights(nodes)
    n = len(nodes)
    diff = points[:, None] - nodes[None, :]
    vals = np.empty((len(points), n))
    ders = np.zeros((len(points), n))
    for k in range(n):
        others = [j for j in range(n) if j != k]
        vals[:, k] = weights[k] * np.prod(diff[:, others], axis=1)
        for j in others:
            rest = [i for i in others if i != j]
            ders[:, k] += np.prod(diff[:, rest], axis=1)
        ders[:, k] *= weights[k]
    return vals, ders
