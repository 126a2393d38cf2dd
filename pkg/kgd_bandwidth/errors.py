# File Summary: Exception hierarchy shared by the numerical library and the CLI.

"""
Errors raised by kgd-bandwidth.

Every library failure derives from KernelRegressionError so the CLI can map
it to exit code 1; UsageError maps to exit code 2.
"""

from typing import Optional


class KernelRegressionError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(KernelRegressionError, ValueError):
    """An argument violates its documented precondition."""


class UsageError(KernelRegressionError):
    """Invalid command-line usage (missing or conflicting flags)."""


class NotPSDError(KernelRegressionError):
    """A kernel matrix has an eigenvalue below the clamping threshold."""


class DegenerateResponseError(KernelRegressionError):
    """The response vector is constant, so R² is undefined."""


class DivergenceError(KernelRegressionError):
    """Gradient descent produced non-finite values."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class SelectionFailedError(KernelRegressionError):
    """No hyper-parameter candidate produced a finite score."""


class SchemaError(KernelRegressionError):
    """A CSV file lacks a requested column."""


class CSVParseError(KernelRegressionError):
    """A CSV cell could not be parsed as a number."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.line = line
        self.column = column


class DegenerateTestError(KernelRegressionError):
    """All paired differences are zero."""


class DegenerateTrajectoryError(KernelRegressionError):
    """A trajectory cannot be averaged (too short or zero residual throughout)."""
