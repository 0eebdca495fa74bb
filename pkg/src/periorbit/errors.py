"""Exception types shared across the package."""


class PeriorbitError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PeriorbitError, ValueError):
    """Chart coordinates lie outside the (enlarged) block bounds."""


class NumericError(PeriorbitError, ArithmeticError):
    """A field, metric, or derived quantity evaluated to a non-finite value."""


class ValidationError(PeriorbitError, ValueError):
    """Construction-time parameters violate a declared precondition."""


class HypothesisFailure(PeriorbitError, ValueError):
    """A dissipativity hypothesis fails hard enough that derived
    quantities (energy caps) cannot be computed at all."""


class ConfigurationError(PeriorbitError, ValueError):
    """Malformed run configuration, empty sample plan, or missing report."""


class IntegrationError(PeriorbitError, RuntimeError):
    """Time integration failed (step underflow, step budget exhausted).

    Carries the partial trajectory computed so far in ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class EscapeError(PeriorbitError, RuntimeError):
    """A trajectory left the enlarged bounds before the requested end time."""


class ResourceError(PeriorbitError, RuntimeError):
    """A combinatorial computation would exceed its size guard."""
