"""Exception hierarchy.

Two families matter to callers: :class:`DataError` for malformed or
inconsistent input and :class:`NumericalError` for solver failures. The CLI
maps them onto distinct exit codes.
"""

from __future__ import annotations


class ConjFieldError(Exception):
    """Base class for every error raised by this package."""


class DataError(ConjFieldError):
    pass


class NumericalError(ConjFieldError):
    pass


class PreconditionError(ConjFieldError, ValueError):
    """An operation was called with arguments outside its contract."""


class InvalidParameter(PreconditionError):
    """A model parameter lies outside its admissible range."""


# --- data ------------------------------------------------------------------

class ParseError(DataError):
    pass


class NonMonotoneTime(DataError):
    pass


class EmptySeries(DataError):
    pass


class NonUniformGrid(DataError):
    pass


class InsufficientSpan(DataError):
    pass


class MixedDeltaT(DataError):
    pass


class NonMonotoneData(DataError):
    pass


# --- numerics --------------------------------------------------------------

class InvalidBracket(NumericalError, ValueError):
    pass


class MaxIterExceeded(NumericalError):
    """Iteration cap hit. ``partial`` holds the best available result."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SlowConvergence(MaxIterExceeded):
    pass


class OutOfRange(NumericalError):
    def __init__(self, message: str, boundary_time: float | None = None):
        super().__init__(message)
        self.boundary_time = boundary_time


class NotMonotone(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class SpuriousPole(NumericalError):
    pass


class NotAFixedPoint(NumericalError):
    pass


class NoFixedPointInClosure(NumericalError):
    pass


class InconsistentSign(NumericalError):
    """``D(z) - z`` changes sign inside a subinterval that should not have one."""


class NonMonotoneSequence(NumericalError):
    pass


class NonPositiveFactor(NumericalError):
    pass


class UndefinedSplinter(NumericalError):
    pass


class InterpolationOutOfHull(NumericalError):
    pass


class ConstraintViolation(NumericalError):
    pass


class MismatchedEndpoints(NumericalError):
    pass


class NonFiniteRatio(NumericalError):
    pass


class InvalidMultiplier(NumericalError, ValueError):
    pass


class ZeroReference(NumericalError):
    pass


class ZeroDenominator(NumericalError, ZeroDivisionError):
    pass


class DivisionByZero(NumericalError, ZeroDivisionError):
    pass


class NonHyperbolic(NumericalError):
    pass


class DomainMarginWarning(UserWarning):
    """A derivative was taken one-sided because the point sits near the domain edge."""


class ExtrapolationWarning(UserWarning):
    pass
