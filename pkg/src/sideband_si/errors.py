"""Exception types raised across the package."""


class SidebandError(Exception):
    """Base class for all package errors."""


class ParameterError(SidebandError, ValueError):
    """An input violates a documented invariant."""


class NoPhysicalRoot(SidebandError):
    pass


class SingularDenominator(SidebandError, ZeroDivisionError):
    pass


class TailUndefined(SidebandError):
    """Large photon-number tail is not defined for zero coupling."""


class CouplingZero(SidebandError):
    pass


class NonConvergence(SidebandError):
    """Iterative solver stopped before reaching tolerance.

    The best solution found is kept on ``best`` so callers can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class JacobianSingular(SidebandError):
    pass


class Instability(SidebandError):
    pass


class NoPeaksFound(SidebandError):
    pass


class FitDiverged(SidebandError):
    pass


class SegmentTooLong(SidebandError):
    pass


class OrderingViolation(SidebandError):
    pass


class InvalidConfig(SidebandError, ValueError):
    pass
