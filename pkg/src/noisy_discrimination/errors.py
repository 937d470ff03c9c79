"""Exception types shared across the package."""

from __future__ import annotations


class InvalidInput(ValueError):
    """An argument violates a documented precondition."""


class ValidationError(ValueError):
    """A parsed document violates the problem-file schema.

    Carries the JSON path of the offending field and, where meaningful,
    the measured residual of the violated constraint.
    """

    def __init__(self, path: str, message: str, residual: float | None = None):
        self.path = path
        self.residual = residual
        detail = f"{path}: {message}"
        if residual is not None:
            detail += f" (residual {residual:.3e})"
        super().__init__(detail)


class ParseError(ValueError):
    """Malformed JSON, with the line and column of the first error."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class NumericalFailure(ArithmeticError):
    """A numerical guarantee broke down (imaginary residue, singular scale matrix, ...)."""


class ConvergenceFailure(RuntimeError):
    """Iteration budget exhausted before the optimality certificate passed.

    ``best`` holds the best iterate found (a SolveResult whose certificate
    records the remaining residuals).
    """

    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)
