"""Exception hierarchy.

Two families: :class:`ValidationError` for bad inputs (wrong shapes, bad
parameters, malformed files) and :class:`NumericalError` for failures that
only show up while computing (singular pencils, non-convergent
decompositions). The CLI maps them to exit codes 2 and 3.
"""


class DdmorError(Exception):
    """Base class for all package errors."""


class ValidationError(DdmorError, ValueError):
    pass


class NumericalError(DdmorError, ArithmeticError):
    pass


# -- validation ---------------------------------------------------------------

class DimensionMismatch(ValidationError):
    pass


class DomainMismatch(ValidationError):
    pass


class BadParams(ValidationError):
    pass


class BadRange(ValidationError):
    pass


class BadDamping(ValidationError):
    pass


class BadShift(ValidationError):
    pass


class NodeAtSingularity(ValidationError):
    pass


class MissingDerivative(ValidationError):
    pass


class MissingSample(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class NotConjugateClosed(ValidationError):
    pass


class ShiftOnAxis(ValidationError):
    pass


class ShiftOnCircle(ValidationError):
    pass


class FileFormat(ValidationError):
    """Malformed dataset file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# -- numerical ----------------------------------------------------------------

class Singular(NumericalError):
    pass


class SingularPencil(NumericalError):
    pass


class NonDiagonalizable(NumericalError):
    pass


class Overflow(NumericalError):
    pass


class PointIsPole(NumericalError):
    pass


class Unstable(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class RankTooLow(NumericalError):
    pass


class RankDeficientRegressor(NumericalError):
    pass


class UnobservableGenerator(NumericalError):
    pass


class NotObservable(NumericalError):
    pass


class NotControllable(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class SurrogatePoleHit(NumericalError):
    pass


class SingularReducedE(NumericalError):
    pass
