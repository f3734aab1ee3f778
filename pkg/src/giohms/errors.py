"""Exception hierarchy shared by the pipeline stages."""


class GiohmsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParseError(GiohmsError, ValueError):
    """Malformed edge-list or cover input."""

    exit_code = 3

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DomainError(GiohmsError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 3


class ConfigError(GiohmsError, ValueError):
    """Invalid configuration value."""

    exit_code = 2


class CapacityError(GiohmsError):
    """A computation would exceed its supported size."""

    exit_code = 4
