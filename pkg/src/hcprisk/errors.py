"""Exception types.

Each class carries the process exit code the CLI maps it to:
2 input parse error, 3 domain/config error, 4 runtime model error.
"""

from __future__ import annotations


class RiskError(Exception):
    exit_code = 3


class InputParseError(RiskError):
    """Malformed input file or row."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(RiskError, ValueError):
    """A value lies outside its mathematical domain (e.g. p not in [0, 1])."""


class ConfigurationError(RiskError):
    pass


class SchemaError(RiskError, ValueError):
    """Dimension or name mismatch between a model and its inputs."""


class DistributionError(DomainError):
    pass


class BudgetError(RiskError):
    pass


class FoldError(RiskError):
    def __init__(self, message: str, fold: int | None = None):
        super().__init__(message)
        self.fold = fold


class ConvergenceError(RiskError):
    exit_code = 4

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SeparationError(RiskError):
    exit_code = 4


class ImpossibleEvidenceError(RiskError):
    exit_code = 4


class NetworkValidationError(RiskError):
    """Raised with the full list of problems found in a network definition."""

    exit_code = 2

    def __init__(self, errors: list[str]):
        super().__init__("invalid network:\n  " + "\n  ".join(errors))
        self.errors = list(errors)
