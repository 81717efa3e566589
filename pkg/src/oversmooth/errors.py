"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class OversmoothError(Exception):
    exit_code = 1


class ParameterError(OversmoothError, ValueError):
    """Invalid model, layer, or perturbation parameters."""

    exit_code = 2


class ParseError(OversmoothError, ValueError):
    """Malformed edge-list input."""

    exit_code = 3

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(OversmoothError, ValueError):
    exit_code = 3


class ShapeError(OversmoothError, ValueError):
    """Operand dimensions do not chain."""

    exit_code = 4


class NumericError(OversmoothError, ArithmeticError):
    """An iterative or LAPACK routine failed to converge."""

    exit_code = 4


class DegenerateSpectrumError(NumericError):
    """No eigenvalue lies above the zero tolerance (edgeless graph)."""


class UndefinedQuotientError(NumericError):
    """Rayleigh quotient requested for the zero signal."""
