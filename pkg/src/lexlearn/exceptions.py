"""Shared exception types.

All data/shape problems raise ValueError subclasses so callers can catch
broadly; the specific classes exist for precise CLI error reporting.
"""


class ShapeError(ValueError):
    """Matrix or vector dimensions do not line up."""


class SingularMatrixError(ValueError):
    """Normal equations are singular; a ridge penalty would fix it."""


class InputError(ValueError):
    """Semantically invalid input (bad frequencies, missing words, ...)."""


class FileFormatError(ValueError):
    """A data file does not follow its documented format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""
