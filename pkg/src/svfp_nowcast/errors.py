"""Exception hierarchy shared across the package.

Every error raised deliberately by the library derives from
:class:`NowcastError`; the CLI maps the subclasses onto exit codes.
"""


class NowcastError(Exception):
    exit_code = 1


class ConfigurationError(NowcastError, ValueError):
    exit_code = 1


class DomainError(NowcastError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 1


class ShapeError(NowcastError, ValueError):
    exit_code = 1


class DataError(NowcastError, ValueError):
    exit_code = 2


class CheckpointError(NowcastError, RuntimeError):
    exit_code = 2


class NumericalError(NowcastError, RuntimeError):
    """Raised when a loss or gradient becomes non-finite."""

    exit_code = 3
