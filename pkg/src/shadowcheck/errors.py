"""Exception hierarchy.  Each family maps onto one CLI exit code."""


class ShadowCheckError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(ShadowCheckError, ValueError):
    """Malformed or out-of-range input (exit code 1)."""

    exit_code = 1


class DimensionError(InvalidInputError):
    """Shape or dimension mismatch, or a dimension above the dense cap."""


class BudgetExceededError(ShadowCheckError):
    """An enumeration or sampling budget would be exceeded (exit code 2)."""

    exit_code = 2


class SolverError(ShadowCheckError):
    """A numerical solver failed to converge or reported failure (exit code 3)."""

    exit_code = 3
