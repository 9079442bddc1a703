"""Higher-order space-time moving finite elements for 1D convection-diffusion."""
from . import analysis, fespace, mesh, problems, quadrature, solver, time_basis

__all__ = ["analysis", "fespace", "mesh", "problems", "quadrature", "solver", "time_basis"]
__version__ = "0.1.0"
