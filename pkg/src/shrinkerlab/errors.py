"""Exception hierarchy shared by all shrinkerlab modules."""


class ShrinkerLabError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(ShrinkerLabError, ValueError):
    """An operation was called outside its documented domain."""


class GridExtentError(ShrinkerLabError):
    """A point, ball or trajectory leaves the truncated radial grid.

    Attributes
    ----------
    required_rho_max : float
        Euclidean-factor extent that would have been sufficient.
    """

    def __init__(self, message, required_rho_max):
        super().__init__(f"{message} (required rho_max >= {required_rho_max:.6g})")
        self.required_rho_max = float(required_rho_max)


class QuadratureError(ShrinkerLabError):
    """Panel refinement did not reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved relative tolerance {achieved:.3e})")
        self.achieved = float(achieved)


class ConvergenceError(ShrinkerLabError):
    """An iterative solver stopped before its certificate was met."""

    def __init__(self, message, residual, best=None):
        extra = "" if best is None else f", best value {best:.12g}"
        super().__init__(f"{message} (last residual {residual:.3e}{extra})")
        self.residual = float(residual)
        self.best = best


class ResolutionError(ShrinkerLabError):
    """Data or scales fall below what the grid can represent; refine the grid."""


class StepError(ShrinkerLabError):
    """A time integrator failed its residual target."""

    def __init__(self, message, suggested_steps):
        super().__init__(f"{message}; try at least {suggested_steps} steps")
        self.suggested_steps = int(suggested_steps)


class ConfigError(ShrinkerLabError, ValueError):
    """Malformed run configuration."""
