"""Exception types raised across the package."""


class RMPPAError(Exception):
    """Base class for all errors raised by rmppa."""


class DimensionError(RMPPAError, ValueError):
    """Operands have non-conforming shapes."""


class ParameterError(RMPPAError, ValueError):
    """Solver parameters fall outside the admissible region."""


class ConvergenceError(RMPPAError, RuntimeError):
    """An iterative routine hit its iteration cap.

    ``last`` holds the final estimate (or residual) so callers can still
    inspect how far the routine got.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class SubproblemError(RMPPAError, RuntimeError):
    """The primal subproblem could not be solved safely."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(RMPPAError, ValueError):
    """Malformed or inadmissible configuration file."""
