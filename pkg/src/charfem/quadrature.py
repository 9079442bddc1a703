"""Interpolatory time quadrature on the reference interval [0, 1].

The rules here interpolate between p-point Gauss-Legendre (order 2p) and
right Gauss-Radau (order 2p-1, last knot at 1). The knots of the member with
parameter ``gamma`` are the roots of the quasi-orthogonal polynomial

    P_p(2t - 1) + gamma * P_{p-1}(2t - 1),

with ``gamma = 0`` for Gauss and ``gamma = -1`` for Radau. Each rule carries
its error constant ``c_p`` defined by

    int_0^1 v dt = Q(v) - c_p * v^(2p-1)    for every v of degree 2p - 1.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import legendre

P_MAX = 8
GAMMA_RADAU = -1.0

_EXACT_TOL = 1e-12
_ROOT_TOL = 1e-13


class QuadratureError(ValueError):
    """Raised when a rule cannot be built or fails its invariants."""


@dataclass(frozen=True, eq=False)
class ReferenceRule:
    degree_p: int
    knots: np.ndarray
    weights: np.ndarray
    c_p: float
    family_parameter: float

    @property
    def name(self):
        if self.family_parameter == 0.0:
            return "gauss"
        if self.family_parameter == GAMMA_RADAU:
            return "radau"
        return f"theta:{self.family_parameter / GAMMA_RADAU:g}"

    def times(self, t0, dt):
        """Collocation times ``t0 + knot * dt`` of a physical interval."""
        return t0 + self.knots * dt

    def __str__(self):
        lines = [f"{self.name} rule, p={self.degree_p}, c_p={self.c_p:.6e}",
                 f"{'j':>3} {'knot':>22} {'weight':>22}"]
        for j, (t, w) in enumerate(zip(self.knots, self.weights), start=1):
            lines.append(f"{j:>3} {t:22.16f} {w:22.16f}")
        return "\n".join(lines)


def _check_degree(p):
    if int(p) != p or not 1 <= p <= P_MAX:
        raise QuadratureError(f"degree p={p} outside supported range 1..{P_MAX}")
    return int(p)


def _moment_weights(knots):
    # Moment system in the shifted Legendre basis: sum_j w_j P_k(2 t_j - 1) = delta_k0.
    p = len(knots)
    vander = legendre.legvander(2.0 * knots - 1.0, p - 1).T
    moments = np.zeros(p)
    moments[0] = 1.0
    return np.linalg.solve(vander, moments)


def _validate(knots, weights):
    if np.any(np.diff(knots) <= 0.0):
        raise QuadratureError("knots are not strictly increasing")
    if knots[0] <= 0.0 or knots[-1] > 1.0:
        raise QuadratureError(f"knots leave (0, 1]: {knots}")
    if np.any(weights <= 0.0):
        raise QuadratureError(f"non-positive weight in {weights}")


def _finish(p, knots, weights, gamma):
    knots = np.asarray(knots, dtype=float)
    weights = np.asarray(weights, dtype=float)
    _validate(knots, weights)
    knots.setflags(write=False)
    weights.setflags(write=False)
    rule = ReferenceRule(p, knots, weights, 0.0, float(gamma))
    return ReferenceRule(p, knots, weights, compute_cp(rule), float(gamma))


def gauss_rule(p):
    """p-point Gauss-Legendre rule mapped to [0, 1]."""
    p = _check_degree(p)
    x, w = legendre.leggauss(p)
    return _finish(p, 0.5 * (x + 1.0), 0.5 * w, 0.0)


def radau_rule(p):
    """p-point right Gauss-Radau rule on [0, 1] (last knot exactly 1)."""
    return theta_rule(p, 1.0)


def theta_rule(p, s):
    """Member ``gamma = s * GAMMA_RADAU`` of the Gauss/Radau family.

    ``s = 0`` gives the Gauss rule and ``s = 1`` the right Radau rule; for
    ``p = 1`` the single knot is the theta of the classical theta-method.
    """
    p = _check_degree(p)
    if not 0.0 <= s <= 1.0:
        raise QuadratureError(f"family parameter s={s} outside [0, 1]")
    gamma = s * GAMMA_RADAU
    coef = np.zeros(p + 1)
    coef[p] = 1.0
    coef[p - 1] += gamma
    roots = legendre.legroots(coef)
    if np.max(np.abs(np.imag(roots))) > 1e-10:
        raise QuadratureError(f"complex knots for p={p}, s={s}")
    x = np.sort(np.real(roots))
    dcoef = legendre.legder(coef)
    for _ in range(20):
        step = legendre.legval(x, coef) / legendre.legval(x, dcoef)
        x = x - step
        if np.max(np.abs(step)) < 1e-16:
            break
    if np.max(np.abs(legendre.legval(x, coef))) > _ROOT_TOL:
        raise QuadratureError(f"knot polishing did not converge for p={p}, s={s}")
    knots = 0.5 * (x + 1.0)
    if s == 1.0:
        knots[-1] = 1.0
    return _finish(p, knots, _moment_weights(knots), gamma)


def compute_cp(rule):
    """Error constant ``(Q(t^(2p-1)) - 1/(2p)) / (2p-1)!`` of a rule.

    The rule must integrate every monomial of degree <= 2p - 2 exactly; values
    within 1e-12 of zero are clamped to zero and clearly negative values are
    rejected.
    """
    p = rule.degree_p
    for k in range(2 * p - 1):
        if abs(apply(rule, rule.knots ** k) - 1.0 / (k + 1)) > _EXACT_TOL:
            raise QuadratureError(f"rule is not exact for t^{k}")
    defect = apply(rule, rule.knots ** (2 * p - 1)) - 1.0 / (2 * p)
    cp = defect / factorial(2 * p - 1)
    if abs(cp) <= _EXACT_TOL:
        return 0.0
    if cp < 0.0:
        raise QuadratureError(f"negative error constant c_p={cp}")
    return cp


def apply(rule, samples):
    """Weighted mean ``sum_j w_j * samples[j]`` over the reference interval."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != rule.degree_p:
        raise QuadratureError(
            f"expected {rule.degree_p} samples, got {samples.shape[0]}")
    return np.tensordot(rule.weights, samples, axes=(0, 0))


def make_rule(spec, p):
    """Build a rule from a name: ``gauss``, ``radau`` or ``theta:S``."""
    if spec == "gauss":
        return gauss_rule(p)
    if spec == "radau":
        return radau_rule(p)
    if spec.startswith("theta:"):
        return theta_rule(p, float(spec.split(":", 1)[1]))
    raise QuadratureError(f"unknown rule family {spec!r}")
