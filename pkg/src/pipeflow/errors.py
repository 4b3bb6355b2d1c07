"""Exception types shared across the package."""


class PipeflowError(Exception):
    """Base class for all package errors."""


class GeometryError(PipeflowError):
    """Invalid channel geometry (self-intersection, bad junction, overlap)."""


class MeshError(PipeflowError):
    """Mesh generation could not reach the quality floor."""


class SingularMatrix(PipeflowError):
    """Factorization hit a zero pivot without remedy."""

    def __init__(self, pivot=None, message=""):
        self.pivot = pivot
        super().__init__(message or f"singular matrix (pivot {pivot})")


class NoConvergence(PipeflowError):
    """An iterative method exhausted its iteration budget."""

    def __init__(self, iterations, message=""):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")


class Diverged(PipeflowError):
    """Nonlinear iteration diverged; carries the residual trace."""

    def __init__(self, history, message=""):
        self.history = list(history)
        super().__init__(message or f"nonlinear iteration diverged after {len(self.history)} steps")


class LineSearchFailure(PipeflowError):
    """Damped Newton could not reduce the residual along the step."""


class ContinuationStalled(PipeflowError):
    """Homotopy step fell below the minimum step size."""

    def __init__(self, lam, step, message=""):
        self.lam = lam
        self.step = step
        super().__init__(message or f"continuation stalled at lambda={lam:.6g} (step {step:.3g})")


class CompatibilityError(PipeflowError):
    """Boundary-data flux mismatch in an all-Dirichlet Stokes subproblem."""


class NegativeInflux(PipeflowError):
    """Inflow data has negative flux across the inlet."""


class ConstantsMissing(PipeflowError):
    """A diagnostic needs constants that were not estimated."""


class ConfigError(PipeflowError):
    """Malformed case file; carries source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(message + where)
