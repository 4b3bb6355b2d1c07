from .space import FESpace, ProblemData, SolutionFields
from . import assembly, quadrature

__all__ = ["FESpace", "ProblemData", "SolutionFields", "assembly", "quadrature"]
