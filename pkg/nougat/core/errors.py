# nougat/core/errors.py
"""
Error hierarchy

Every failure raised by the toolkit carries an error code and the process
exit code the CLI maps it to:
- 1: configuration / parameter validation
- 2: data (malformed input, dimension mismatch)
- 3: numerical (singular systems, mean-square instability)
"""

from typing import Any, Dict, Optional


class NougatError(Exception):
    """Base error with code and details"""

    error_code: str = "NOUGAT_ERROR"
    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(message)


class ConfigurationError(NougatError, ValueError):
    error_code = "INVALID_CONFIGURATION"
    exit_code = 1


class DataError(NougatError, ValueError):
    error_code = "INVALID_DATA"
    exit_code = 2


class DimensionMismatchError(DataError):
    error_code = "DIMENSION_MISMATCH"

    def __init__(self, expected: int, got: int, what: str = "vector"):
        super().__init__(
            f"Dimension mismatch for {what}: expected {expected}, got {got}",
            {"expected": expected, "got": got, "what": what},
        )


class EmptyInputError(DataError):
    error_code = "EMPTY_INPUT"


class CsvParseError(DataError):
    """Malformed CSV input, always row-numbered"""

    error_code = "CSV_PARSE_ERROR"

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"Row {row}: {message}", {"row": row})


class WindowStateError(DataError):
    error_code = "WINDOW_STATE"


class NumericalError(NougatError, ArithmeticError):
    error_code = "NUMERICAL_ERROR"
    exit_code = 3


class SingularSystemError(NumericalError):
    error_code = "SINGULAR_SYSTEM"


class MeanSquareInstabilityError(NumericalError):
    """Raised when the covariance recursion matrix has spectral radius >= 1"""

    error_code = "MEAN_SQUARE_UNSTABLE"

    def __init__(self, rho: float, mu: float):
        self.rho = rho
        super().__init__(
            f"Mean-square unstable: spectral radius rho(S) = {rho:.12g} >= 1 for mu = {mu:.6g}",
            {"rho": rho, "mu": mu},
        )
