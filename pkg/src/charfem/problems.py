"""Manufactured benchmarks and mesh-motion strategies.

Benchmark data (f, g, exact derivatives) are written out by hand in closed
form. Each benchmark also carries sympy expressions for u and the
coefficients; at registration f and g are checked against a symbolic
differentiation of those expressions.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import sympy

from .fespace import ExactSolution, ProblemSpec, constant
from .mesh import DomainSpec, build_trajectories, partition_from_paths

X, T = sympy.symbols("x t", real=True)

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class Benchmark:
    name: str
    problem: ProblemSpec
    domain: DomainSpec
    motions: tuple
    u_expr: object
    coef_exprs: tuple  # (a, b, c) as sympy expressions in x, t
    polynomial_degree: Optional[int] = None


def consistency_residual(bench, samples=100, seed=0):
    """Largest mismatch between the hand-coded data and symbolic derivatives of u.

    Compares f, the two boundary fluxes, u_t, u_x and u0 at ``samples``
    random points of the space-time domain.
    """
    a, b, c = bench.coef_exprs
    u = bench.u_expr
    u_t, u_x = sympy.diff(u, T), sympy.diff(u, X)
    f = u_t - sympy.diff(a * u_x, X) + b * u_x + c * u
    flux = a * u_x
    lam = {name: sympy.lambdify((X, T), expr, "numpy")
           for name, expr in [("f", f), ("flux", flux), ("u", u), ("u_t", u_t), ("u_x", u_x)]}
    dom = bench.domain
    rng = np.random.default_rng(seed)
    xs = rng.uniform(dom.x_min, dom.x_max, samples)
    ts = rng.uniform(0.0, dom.t_final, samples)

    def ev(fn, x, t):
        return np.broadcast_to(np.asarray(fn(x, t), dtype=float), np.shape(x))

    prob, ex = bench.problem, bench.problem.exact
    res = [np.abs(ev(prob.f, xs, ts) - ev(lam["f"], xs, ts)),
           np.abs(ev(ex.u_t, xs, ts) - ev(lam["u_t"], xs, ts)),
           np.abs(ev(ex.u_x, xs, ts) - ev(lam["u_x"], xs, ts)),
           np.abs(ev(ex.u, xs, ts) - ev(lam["u"], xs, ts)),
           np.abs(np.asarray(prob.u0(xs), float) - ev(lam["u"], xs, 0.0 * xs))]
    for t in ts[:10]:
        res.append(np.atleast_1d(abs(prob.g_min(t) + float(lam["flux"](dom.x_min, t)))))
        res.append(np.atleast_1d(abs(prob.g_max(t) - float(lam["flux"](dom.x_max, t)))))
    return float(max(np.max(r) for r in res))


_REGISTRY = {}


def register(name, factory):
    """Register a benchmark factory after checking its default instance."""
    bench = factory()
    residual = consistency_residual(bench)
    if residual > CONSISTENCY_TOL:
        raise ValueError(f"benchmark {name!r} inconsistent: residual {residual:.3e}")
    _REGISTRY[name] = factory


def get_benchmark(name, **params):
    if not _REGISTRY:
        _register_builtins()
    if name not in _REGISTRY:
        raise KeyError(f"unknown benchmark {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name](**params)


def benchmark_names():
    if not _REGISTRY:
        _register_builtins()
    return sorted(_REGISTRY)


def traveling_gaussian(v=1.0, sigma=0.1, a0=1e-2, x0=0.3, domain=None):
    """u = exp(-(x - x0 - v t)^2 / sigma^2) with b = v, a = a0, c = 0."""
    if not sigma > 0.0 or not a0 > 0.0:
        raise ValueError("sigma and a0 must be positive")
    domain = domain or DomainSpec(0.0, 1.0, 0.4)
    s2 = sigma * sigma

    def u(x, t):
        xi = x - x0 - v * t
        return np.exp(-xi * xi / s2)

    def u_x(x, t):
        return -2.0 * (x - x0 - v * t) / s2 * u(x, t)

    def u_t(x, t):
        return -v * u_x(x, t)

    def u_xx(x, t):
        xi = x - x0 - v * t
        return (4.0 * xi * xi / (s2 * s2) - 2.0 / s2) * u(x, t)

    problem = ProblemSpec(
        a=constant(a0), b=constant(v), c=constant(0.0),
        f=lambda x, t: -a0 * u_xx(x, t),
        g_min=lambda t: -a0 * float(u_x(domain.x_min, t)),
        g_max=lambda t: a0 * float(u_x(domain.x_max, t)),
        u0=lambda x: u(x, 0.0),
        exact=ExactSolution(u, u_t, u_x, u_xx))
    u_expr = sympy.exp(-(X - x0 - v * T) ** 2 / sympy.Float(s2))
    return Benchmark("traveling_gaussian", problem, domain,
                     ("static", "characteristics"), u_expr,
                     (sympy.Float(a0), sympy.Float(v), sympy.Integer(0)))


_POLY_FORMS = {
    # name: (u, u_t, u_x, degree in x, degree in t)
    "const": (lambda x, t: 1.0 + 0.0 * x, lambda x, t: 0.0 * x, lambda x, t: 0.0 * x, 0, 0),
    "x+t": (lambda x, t: x + t, lambda x, t: 1.0 + 0.0 * x, lambda x, t: 1.0 + 0.0 * x, 1, 1),
    "x*t": (lambda x, t: x * t, lambda x, t: x + 0.0 * t, lambda x, t: t + 0.0 * x, 1, 1),
}
_POLY_EXPRS = {"const": sympy.Integer(1), "x+t": X + T, "x*t": X * T}


def polynomial_exactness(p=1, form="x+t", b=0.0, c=0.0, domain=None):
    """Polynomial solution lying in the degree-p space on any static mesh.

    ``form`` is ``const``, ``x+t`` or ``x*t``; diffusion is a = 1.
    """
    if form not in _POLY_FORMS:
        raise ValueError(f"unknown polynomial form {form!r}")
    u, u_t, u_x, deg_x, deg_t = _POLY_FORMS[form]
    if max(deg_x, deg_t) > p:
        raise ValueError(f"form {form} needs degree >= {max(deg_x, deg_t)}")
    domain = domain or DomainSpec(0.0, 1.0, 1.0)

    def f(x, t):
        return u_t(x, t) + b * u_x(x, t) + c * u(x, t)

    problem = ProblemSpec(
        a=constant(1.0), b=constant(b), c=constant(c), f=f,
        g_min=lambda t: -float(u_x(domain.x_min, t)),
        g_max=lambda t: float(u_x(domain.x_max, t)),
        u0=lambda x: u(x, 0.0),
        exact=ExactSolution(u, u_t, u_x, lambda x, t: 0.0 * x))
    return Benchmark(f"poly_{form}", problem, domain, ("static", "prescribed"),
                     _POLY_EXPRS[form], (sympy.Integer(1), sympy.Float(b), sympy.Float(c)),
                     deg_x + deg_t)


def _register_builtins():
    register("traveling_gaussian", traveling_gaussian)
    register("poly_const", lambda **kw: polynomial_exactness(form="const", **kw))
    register("poly_x+t", lambda **kw: polynomial_exactness(form="x+t", **kw))
    register("poly_x*t", lambda **kw: polynomial_exactness(form="x*t", **kw))


# ---------------------------------------------------------------------------
# mesh motion


@dataclass(frozen=True)
class VelocityMotion:
    """Nodes advected by ``velocity(x, t)``."""

    name: str
    velocity: Callable
    substeps: int = 8

    def build(self, start, interval, basis, index=1, check_knots=()):
        return build_trajectories(start, interval, self.velocity, basis, index=index,
                                  check_knots=check_knots, substeps=self.substeps)


@dataclass(frozen=True)
class PathMotion:
    """Nodes following closed-form paths ``path(x_start, t_start, t)``."""

    name: str
    path: Callable

    def build(self, start, interval, basis, index=1, check_knots=()):
        t0 = interval[0]
        return partition_from_paths(start, interval, lambda x0, t: self.path(x0, t0, t),
                                    basis, index=index, check_knots=check_knots)


def boundary_taper(domain, margin):
    """Smoothstep weight, 0 on the boundary and 1 at distance >= margin from it."""
    def taper(x):
        d = np.minimum(x - domain.x_min, domain.x_max - x) / margin
        d = np.clip(d, 0.0, 1.0)
        return d * d * (3.0 - 2.0 * d)
    return taper


def _zero(x, t):
    return np.zeros_like(x)


def motion_strategy(kind, problem=None, domain=None, margin=None, w=None):
    """Mesh motion: ``static``, ``characteristics`` (x_t = b, tapered) or ``prescribed``.

    For characteristics the convection velocity is damped to zero over
    ``margin`` (default 10% of the domain) at each end so the boundary nodes
    stay put. A prescribed motion takes either a velocity ``w(x, t)`` or a
    ready-made motion object.
    """
    if kind == "static":
        return VelocityMotion("static", _zero)
    if kind == "characteristics":
        if problem is None or domain is None:
            raise ValueError("characteristic motion needs the problem and domain")
        taper = boundary_taper(domain, margin or 0.1 * domain.length)
        b = problem.b

        def vel(x, t):
            return np.broadcast_to(np.asarray(b(x, t), float), np.shape(x)) * taper(x)
        return VelocityMotion("characteristics", vel)
    if kind == "prescribed":
        if w is None:
            raise ValueError("prescribed motion needs w")
        if hasattr(w, "build"):
            return w
        return VelocityMotion("prescribed", w)
    raise ValueError(f"unknown motion kind {kind!r}")


def dilation(domain, rate=0.2):
    """Interior nodes dilate about the domain centre at ``rate`` per unit time.

    Paths are linear in time within each partition; the two boundary
    elements absorb the change.
    """
    centre = 0.5 * (domain.x_min + domain.x_max)

    def path(x0, t0, t):
        return centre + (x0 - centre) * (1.0 + rate * (t - t0))
    return PathMotion("dilate", path)


def breathing(domain, amplitude=0.05, frequency=1.0):
    """Smooth interior oscillation x_t = A sin(2 pi (x - x_min)/L) cos(2 pi f t)."""
    L = domain.length

    def vel(x, t):
        return (amplitude * np.sin(2.0 * np.pi * (x - domain.x_min) / L)
                * np.cos(2.0 * np.pi * frequency * t))
    return VelocityMotion("breathing", vel)


def crossing(domain, amplitude=None):
    """Neighbouring interior nodes moving in opposite directions until they cross."""
    amplitude = amplitude or domain.length

    def path(x0, t0, t):
        sign = np.where(np.arange(len(x0)) % 2 == 0, 1.0, -1.0)
        return x0 + amplitude * sign * (t - t0)
    return PathMotion("crossing", path)


def named_motion(name, bench):
    """Motion by CLI name: static, characteristics, prescribed:dilate|breathing|crossing|reverse."""
    problem, domain = bench.problem, bench.domain
    if name in ("static", "characteristics"):
        return motion_strategy(name, problem, domain)
    if name.startswith("prescribed:"):
        which = name.split(":", 1)[1]
        if which == "dilate":
            return dilation(domain)
        if which == "breathing":
            return breathing(domain)
        if which == "crossing":
            return crossing(domain)
        if which == "reverse":
            b = problem.b
            return motion_strategy(
                "prescribed", w=lambda x, t: -np.broadcast_to(np.asarray(b(x, t), float),
                                                              np.shape(x)))
        raise ValueError(f"unknown prescribed motion {which!r}")
    raise ValueError(f"unknown motion {name!r}")
