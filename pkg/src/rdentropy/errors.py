"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """A caller-supplied argument is outside the supported range."""


class DomainError(ValueError):
    """A state left the admissible set of the physical problem.

    Carries enough context (value, and where it happened) to locate the
    offending degree of freedom or element.
    """

    def __init__(self, message, value=None, where=None):
        super().__init__(message)
        self.value = value
        self.where = where


class NumericalError(RuntimeError):
    """An iterative procedure failed to converge."""
