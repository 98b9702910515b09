"""Exception types shared across the package."""


class ToaLabError(Exception):
    """Base class for all toa_lab errors."""


class NonConvergence(ToaLabError):
    """A quadrature, series or extrapolation did not meet its tolerance.

    The best available estimate and its error estimate are carried along so
    callers can decide whether the partial result is still usable.
    """

    def __init__(self, message, estimate=None, err_est=None):
        super().__init__(message)
        self.estimate = estimate
        self.err_est = err_est


class BesselOverflow(ToaLabError, OverflowError):
    pass


class NotAnalytic(ToaLabError):
    pass


class WrongVariant(ToaLabError):
    pass


class UnknownRule(ToaLabError, KeyError):
    pass


class InvalidRule(ToaLabError, ValueError):
    pass


class DerivativeUnavailable(ToaLabError):
    pass


class UnsupportedCombination(ToaLabError):
    pass


class DomainError(ToaLabError, ValueError):
    pass


class InsufficientCapture(ToaLabError):
    pass


class FlatDistribution(ToaLabError):
    pass
