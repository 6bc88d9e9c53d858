"""Exception types shared across the package."""


class KRoughError(Exception):
    """Base class for all package errors."""


class SingularArgumentError(KRoughError, ValueError):
    """A singular coordinate was evaluated exactly at zero."""


class RegimeError(KRoughError, ValueError):
    """Hurst indices fall outside the regime an operation supports."""


class QuadratureError(KRoughError, RuntimeError):
    """A quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    estimate : float
        Last achieved error estimate.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(f"{message} (achieved error estimate {estimate:.3e})")
        self.estimate = estimate


class ResolutionError(KRoughError, ValueError):
    """A lattice or time step is too coarse for the requested object."""


class TailBoundError(KRoughError, RuntimeError):
    """A truncated series cannot meet the requested accuracy."""
