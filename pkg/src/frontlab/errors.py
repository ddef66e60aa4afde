"""Exception types raised by frontlab operations."""


class FrontLabError(Exception):
    """Base class for all frontlab errors."""


class InvalidInputError(FrontLabError, ValueError):
    """Non-finite or out-of-contract input."""


class UnresolvedDerivativeError(FrontLabError):
    """Tabulated nonlinearity has no samples close enough to 0."""


class DegenerateDerivativeError(FrontLabError):
    """f'(0) vanishes (or is negative) where a positive rate is required."""


class NoMonotoneFrontError(FrontLabError):
    """No monotone traveling-front connection exists at the requested speed."""


class ConvergenceFailureError(FrontLabError):
    """Shooting / fitting did not converge; diagnostics in args."""


class BracketFailureError(FrontLabError):
    """Bisection bracket for the minimal speed could not be established."""


class WindowTooNarrowError(FrontLabError):
    """Requested window cannot accommodate the profile at the edge tolerances."""


class BlowUpError(FrontLabError):
    """Non-finite values appeared during time stepping."""


class FrontLostError(FrontLabError):
    """Tracked level is no longer crossed by the solution."""


class NoCrossingError(FrontLabError):
    """A field does not cross the requested level."""


class InsufficientDataError(FrontLabError):
    """Track or trajectory does not span enough time for the estimator."""


class InvalidEpsError(FrontLabError, ValueError):
    """Envelope slack eps outside (0, lambda)."""


class InvalidWindowError(FrontLabError, ValueError):
    """Fit window violates its preconditions."""


class TailResolutionError(FrontLabError):
    """Numerical tail decay drifted too far from the expected exponent."""


class NoComparisonError(FrontLabError):
    """No admissible time shift orders the two trajectories."""


class ConstructionError(FrontLabError):
    """Requested nonlinearity pair cannot be built with the given parameters."""


class ScenarioError(FrontLabError):
    """Scenario configuration is missing keys or fails validation."""
