"""Exception hierarchy shared by all modules."""


class FinslerLabError(Exception):
    """Base class for every error raised by finsler_lab."""


class InputError(FinslerLabError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class SlitBundleError(FinslerLabError, ValueError):
    """A derivative was requested at (or too close to) the zero vector."""


class ChartExitError(FinslerLabError):
    """A curve left the chart domain. ``path`` holds the samples computed so far."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class UnsupportedError(FinslerLabError):
    """Operation not available for this space (e.g. geodesics of a non-Berwald space)."""


class DomainError(FinslerLabError, ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class NotAProductIsometryError(FinslerLabError):
    """An isometry of a product does not permute the factor blocks."""
