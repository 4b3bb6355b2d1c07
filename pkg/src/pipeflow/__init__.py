"""Steady incompressible Navier-Stokes in 2D distorted pipes.

Taylor-Hood finite elements with mixed boundary conditions: Dirichlet
inflow, no-slip walls and a directional do-nothing outflow condition that
dissipates backflow energy through the negative part of the normal trace.
"""

__version__ = "0.1.0"

from . import diagnostics, geometry, linalg, reference_flow, solver
from .fem import FESpace, ProblemData, SolutionFields, assembly

__all__ = [
    "FESpace",
    "ProblemData",
    "SolutionFields",
    "assembly",
    "diagnostics",
    "geometry",
    "linalg",
    "reference_flow",
    "solver",
    "__version__",
]
