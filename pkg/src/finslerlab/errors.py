"""Exception types shared across modules."""


class FinslerLabError(Exception):
    """Base class for all library errors."""


class IntegrationError(FinslerLabError):
    """ODE integration failed (step limit, non-finite field, solver failure)."""


class StepLimitExceeded(IntegrationError):
    pass


class NonFiniteField(IntegrationError):
    pass


class WindingError(FinslerLabError):
    """Winding number undefined (zero crossing) or grid too coarse."""


class EigenError(FinslerLabError):
    """Non-symmetric input or solver failure."""


class DomainError(FinslerLabError, ValueError):
    """Input outside the documented domain of an operation."""


class ChartPoleError(DomainError):
    """Polar chart evaluated at (or too close to) r in {0, pi}."""


class LabelingError(FinslerLabError):
    """Spectrum winding labels violate the two-per-winding rule."""


class ConvergenceError(FinslerLabError):
    """Newton / least-squares refinement did not converge."""


class ConfigError(FinslerLabError):
    """Invalid run configuration."""
