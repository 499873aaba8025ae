"""Exception hierarchy shared across the package.

Every error derives from :class:`GarchFisError`. The CLI maps the three
families below onto process exit codes.
"""


class GarchFisError(Exception):
    """Base class for all package errors."""


class DataError(GarchFisError, ValueError):
    """Input data violates a precondition (exit code 3)."""


class NumericalError(GarchFisError, ArithmeticError):
    """A numerical procedure could not produce a usable result (exit code 4)."""


class EmptyOrSingleton(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class ZeroVariance(DataError):
    pass


class WindowTooShort(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class TestPartitionTooShort(DataError):
    __test__ = False  # keep pytest from collecting this as a test class


class LengthMismatch(DataError):
    pass


class Empty(DataError):
    pass


class EmptyWindow(DataError):
    pass


class ZeroActual(DataError):
    pass


class ConstantActual(DataError):
    pass


class NonPositiveMean(DataError):
    pass


class NonPositiveWidth(DataError):
    pass


class EmptyFile(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidParams(GarchFisError, ValueError):
    pass


class NonPositiveInitialVariance(GarchFisError, ValueError):
    pass


class InsufficientData(NumericalError):
    pass


class OptimizationFailure(NumericalError):
    pass


class EmptyRuleBase(GarchFisError, ValueError):
    pass
