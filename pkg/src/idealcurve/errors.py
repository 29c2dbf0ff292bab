"""Exception hierarchy shared by every module of the package."""


class IdealCurveError(Exception):
    """Base class for all errors raised by :mod:`idealcurve`."""


class NonFinite(IdealCurveError):
    pass


class NotImmersed(IdealCurveError):
    pass


class AmbiguousWinding(IdealCurveError):
    pass


class UnknownPreset(IdealCurveError):
    pass


class BadParams(IdealCurveError):
    pass


class TruncationTooHigh(IdealCurveError):
    pass


class BadWinding(IdealCurveError):
    pass


class ImmersionLost(IdealCurveError):
    pass


class StepFloorReached(IdealCurveError):
    pass


class CorruptCheckpoint(IdealCurveError):
    pass


class HypothesisNotMet(IdealCurveError):
    """A check was asked to run outside the regime where its inequality applies."""

    def __init__(self, message, value=None, threshold=None):
        super().__init__(message)
        self.value = value
        self.threshold = threshold


class DegenerateDenominator(IdealCurveError):
    pass


class InsufficientData(IdealCurveError):
    pass


class NonPositiveEnergy(IdealCurveError):
    pass


class DegenerateFit(IdealCurveError):
    pass
