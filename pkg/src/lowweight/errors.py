"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from
:class:`LowWeightError`, which the CLI maps to a dedicated exit code.
"""


class LowWeightError(Exception):
    pass


# sparsemat
class NonDivisibleWidth(LowWeightError):
    pass


class InvalidDensity(LowWeightError):
    pass


class ShapeMismatch(LowWeightError):
    pass


class ParseError(LowWeightError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedField(LowWeightError):
    pass


# encoder
class InconsistentParams(LowWeightError):
    pass


class WeightConstraintViolated(LowWeightError):
    pass


# decoder
class WrongSubsetSize(LowWeightError):
    pass


class SingularSystem(LowWeightError):
    pass


class RankDeficient(LowWeightError):
    pass


# stability / verifier
class BudgetExceeded(LowWeightError):
    pass


class SideSizeMismatch(LowWeightError):
    pass


class TooManyClasses(LowWeightError):
    pass


class DeltaOutOfRange(LowWeightError):
    pass


class SubsetTooLarge(LowWeightError):
    pass


# hetero
class InvalidBoundary(LowWeightError):
    pass


class InvalidProfile(LowWeightError):
    pass


class PlanMismatch(LowWeightError):
    pass


# simulator
class NotEnoughSurvivors(LowWeightError):
    pass
