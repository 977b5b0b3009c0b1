"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 1, DataError -> 2,
ConvergenceError -> 3. Core numerical routines raise plain ValueError for
argument-contract violations (shape/dimension mismatches).
"""


class SigcastError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SigcastError):
    """Invalid configuration: unknown keys, bad schema version, out-of-range values."""


class DataError(SigcastError):
    """Invalid input data: malformed cells, duplicate dates, gaps, insufficient history."""


class ConvergenceError(SigcastError):
    """Iterative solver failed to converge within its iteration budget."""

    def __init__(self, message: str, duality_gap: float | None = None):
        super().__init__(message)
        self.duality_gap = duality_gap


class RankDeficientError(ValueError):
    """Least-squares design matrix is rank deficient.

    `dependent_columns` lists the offending column indices (pivoted-QR order).
    """

    def __init__(self, message: str, dependent_columns: tuple[int, ...]):
        super().__init__(message)
        self.dependent_columns = dependent_columns
