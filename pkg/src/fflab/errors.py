"""Exception hierarchy shared by all fflab modules."""


class FractalLabError(Exception):
    """Base class for all domain errors raised by fflab."""


class NonContracting(FractalLabError):
    """A map ratio is zero or has modulus >= 1."""


class SupportViolation(FractalLabError):
    """Some map does not send the declared support interval into itself."""


class DegenerateAttractor(FractalLabError):
    """All fixed points coincide; the attractor would be a single point."""


class BadWeights(FractalLabError):
    """Weight vector is not strictly positive or does not sum to one."""


class ExplosionGuard(FractalLabError):
    """A cut-set expansion exceeded its word-count budget."""


class BudgetExceeded(FractalLabError):
    """A computation exceeded its configured resource budget."""


class NotHomogeneous(FractalLabError):
    """Operation requires all contraction ratios to be equal."""


class DegenerateRange(FractalLabError):
    """Interval [a, b] does not satisfy 1 < a < b."""


class NotInFamily(FractalLabError):
    """Polynomial fails the declared sparse-family membership bounds."""


class QTooSmall(FractalLabError):
    """Steepness parameter q below the admissible lower bound."""


class OracleMissing(FractalLabError):
    """A required derivative oracle was not provided."""


class InsufficientInputDigits(FractalLabError):
    """Input value is known to fewer bits than the computation needs."""


class NotGreaterThanOne(FractalLabError):
    """Base of a power sequence must exceed one."""


class PrecisionExhausted(FractalLabError):
    """Requested evaluation exceeds the available working precision."""
