"""Exception hierarchy shared by all gesfem modules."""


class GesfemError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GesfemError):
    """Invalid arguments, configuration, or file contents."""


class ParseError(ValidationError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceError(GesfemError):
    """Request would exceed a hard resource guard (memory, refinement depth)."""


class GeometryError(GesfemError):
    """Degenerate element, failed projection, or inadmissible surface."""


class ConvergenceError(GesfemError):
    """Iterative solver failed to reach its tolerance; carries the residual."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class PreconditionerError(GesfemError):
    """Preconditioner could not be formed (e.g. zero diagonal entry)."""


class ModelDomainError(GesfemError):
    """Nonlinear model evaluated outside its domain (e.g. u <= 0)."""


class ModelAssumptionError(GesfemError):
    """A structural model assumption (positivity, bounds) failed at runtime."""


class UnsupportedConfigError(GesfemError):
    """Operation requested for a configuration it does not support."""
