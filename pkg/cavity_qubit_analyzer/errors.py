"""
Exception hierarchy for cavity qubit analyzer.

Every error derives from ValueError so callers that only guard against bad
input keep working.
"""

from typing import Optional


class AnalyzerError(ValueError):
    """Base class for all analyzer errors."""


class InvalidParameterError(AnalyzerError):
    """A parameter lies outside its documented domain."""


class DomainError(InvalidParameterError):
    """A formula is evaluated where its sign or denominator breaks down."""


class NoSteadyStateError(AnalyzerError):
    """The rate model has no steady state with a populated excited level."""


class FitError(AnalyzerError):
    """
    The error raised while fitting.

    Args:
        message: Description of the error
        exit_code: Process exit code the CLI should use
    """

    def __init__(self, message: str, exit_code: int = 2):
        super().__init__(message)
        self.exit_code = exit_code


class RankDeficiencyError(FitError):
    """
    The normal matrix is singular.

    Args:
        message: Description of the error
        parameter: Name of the parameter the data does not constrain
    """

    def __init__(self, message: str, parameter: Optional[str] = None):
        super().__init__(message)
        self.parameter = parameter


class NoSignalError(FitError):
    """The data carries no signal to start a fit from (e.g. constant y)."""


class IngestionError(AnalyzerError):
    """Input data could not be turned into a usable series."""


class CsvFormatError(IngestionError):
    """
    A CSV cell or row is malformed.

    Args:
        message: Description of the problem
        row: 1-based line number in the file
        column: Column name or index
    """

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumnError(IngestionError):
    """A requested column is not present in the table."""


class InsufficientDataError(IngestionError):
    """Fewer samples than the model needs."""


class ConfigError(AnalyzerError):
    """Configuration file or value is invalid."""


class UsageError(AnalyzerError):
    """
    Command-line usage error.

    Args:
        message: Description of the error
        usage: Usage line of the (sub)command that rejected the arguments
    """

    def __init__(self, message: str, usage: Optional[str] = None):
        super().__init__(message)
        self.usage = usage
