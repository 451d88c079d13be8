"""Exception types raised across the package."""


class TvtvError(Exception):
    """Base class for all package errors."""


class DimensionError(TvtvError, ValueError):
    """Array shapes or lengths do not agree with an operator or each other."""


class RangeError(TvtvError, ValueError):
    """Input values fall outside the admissible range."""


class InstanceTooLarge(TvtvError, ValueError):
    """A dense construction was requested for a problem above its size guard."""


class SolverFailure(TvtvError, RuntimeError):
    """An inner linear solve failed to reach its tolerance.

    Attributes:
        residual (float): last residual norm reached before giving up.
        iterations (int): iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(TvtvError, ValueError):
    """Invalid run configuration (bad option, missing inputs)."""
