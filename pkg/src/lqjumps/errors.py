"""Exception types raised across the package."""


class LqJumpsError(Exception):
    """Base class for all package errors."""


class InvalidExponentError(LqJumpsError, ValueError):
    pass


class InvalidInputError(LqJumpsError, ValueError):
    pass


class DimensionError(LqJumpsError, ValueError):
    pass


class InvalidModelError(LqJumpsError, ValueError):
    pass


class DimensionTooLargeError(LqJumpsError, ValueError):
    """Raised by brute-force oracles when an instance exceeds their size cap."""


class ConvergenceError(LqJumpsError, RuntimeError):
    """The sum-space optimizer failed; ``best_upper`` is still a valid bound."""

    def __init__(self, message, best_upper):
        super().__init__(message)
        self.best_upper = best_upper
