"""Exception hierarchy shared by every module of the package."""


class DmdExtrapError(Exception):
    """Base class for all errors raised by dmdextrap."""


class NonFinite(DmdExtrapError, ValueError):
    pass


class ZeroMatrix(DmdExtrapError, ValueError):
    pass


class ShapeError(DmdExtrapError, ValueError):
    pass


class BadLength(DmdExtrapError, ValueError):
    pass


class RankDeficient(DmdExtrapError, ValueError):
    pass


class NoConvergence(DmdExtrapError, RuntimeError):
    """The shifted QR iteration hit its iteration cap.

    Usually means the reduced operator is pathological; a looser rank
    truncation tends to help.
    """


class TooFewStates(DmdExtrapError, ValueError):
    pass


class DegenerateData(DmdExtrapError, ValueError):
    pass


class PredictionOverflow(DmdExtrapError, OverflowError):
    """Some |lambda|**n left the floating point range (unstable extrapolation)."""


class RangeError(DmdExtrapError, IndexError):
    pass


class CflViolation(DmdExtrapError, ValueError):
    pass


class StateOutOfRange(DmdExtrapError, FloatingPointError):
    pass


class NormDrift(DmdExtrapError, RuntimeError):
    pass


class SingularInterpolation(DmdExtrapError, ValueError):
    pass


class InvariantViolation(DmdExtrapError, AssertionError):
    """An asserted run-time invariant (e.g. bound dominance) failed."""
