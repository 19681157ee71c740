"""Exception hierarchy shared by all estimators and the CLI."""


class SignCorrError(Exception):
    """Base class for library errors."""


class DomainError(SignCorrError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegeneracyError(SignCorrError, ArithmeticError):
    """The data do not carry enough information (zero scale, collinearity, ...)."""


class ConvergenceError(SignCorrError, RuntimeError):
    """An iterative algorithm hit its iteration cap.

    ``last`` holds the final iterate and ``residual`` the convergence measure
    at that iterate.
    """

    def __init__(self, message, last=None, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.last = last
        self.residual = residual
        self.iterations = iterations


class ConfigError(SignCorrError, ValueError):
    """Invalid simulation or CLI configuration."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
