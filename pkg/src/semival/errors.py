"""Exception hierarchy.

Each family maps to one CLI exit code: configuration problems exit with 2,
data problems with 3 and numeric/domain problems with 4.
"""

from __future__ import annotations


class SemivalError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(SemivalError, ValueError):
    """Invalid run configuration, behavior table or transform registry entry."""

    exit_code = 2

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DataError(SemivalError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class StandardizationError(DataError):
    pass


class DomainError(SemivalError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 4


class NumericError(SemivalError, ArithmeticError):
    exit_code = 4


class CapExceededError(DomainError):
    """Exact enumeration refused because ``n`` exceeds the configured cap."""


class CoverageError(DomainError):
    """Memoized strata statistics do not cover a stratum with nonzero weight."""


class DegenerateBudgetError(DomainError):
    """Payout favorability undefined because the semivalues sum to ~0."""
