"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: input problems give 2, violated
mathematical preconditions give 3, and numerical non-convergence gives 4.
"""


class UncleLabError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 3


class InputError(UncleLabError, ValueError):
    exit_code = 2


class DimensionMismatchError(InputError):
    pass


class SizeCapError(InputError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class InjectivityError(UncleLabError):
    exit_code = 3


class StandardFormError(UncleLabError):
    """Leading transfer eigenvalue is degenerate, or fixed point not positive."""

    exit_code = 3


class UncleUndefinedError(UncleLabError):
    """The epsilon -> 0 limit defining the uncle term could not be certified."""

    exit_code = 3


class GeometryError(UncleLabError):
    exit_code = 3


class ConvergenceError(UncleLabError):
    exit_code = 4
