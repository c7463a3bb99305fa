"""Exception hierarchy.

Three families map onto CLI exit codes: configuration/usage problems (2),
bad or insufficient data (3) and numerical degeneracy (4).
"""

from __future__ import annotations


class WeakKDEError(Exception):
    exit_code = 1


class ConfigError(WeakKDEError, ValueError):
    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidParameter(ConfigError):
    pass


class DataError(WeakKDEError, ValueError):
    exit_code = 3


class EmptySample(DataError):
    pass


class InsufficientSample(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ZeroSpread(DataError):
    pass


class LengthMismatch(DataError):
    pass


class InsufficientPoints(DataError):
    pass


class UnknownColumn(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class AtKinkPoint(WeakKDEError, ValueError):
    """Raised when an a.e. second derivative is requested exactly at a kink."""

    exit_code = 3


class NumericDegeneracy(WeakKDEError, ArithmeticError):
    exit_code = 4


class DegenerateCurvature(NumericDegeneracy):
    pass


class DegenerateKernel(NumericDegeneracy):
    pass


class NonIntegrableSecondMoment(NumericDegeneracy):
    pass


class NonIntegrableSquare(NumericDegeneracy):
    pass


class DataFileNotFound(DataError, FileNotFoundError):
    pass
