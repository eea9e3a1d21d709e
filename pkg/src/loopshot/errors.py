"""Exception classes shared across loopshot.

The CLI maps every ``LoopshotError`` to exit status 2; ``OSError`` maps to 3.
"""


class LoopshotError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(LoopshotError, ValueError):
    """An argument is outside its documented range."""


class ShapeError(LoopshotError, ValueError):
    """Tensor dimensions do not agree."""


class ValidationError(LoopshotError, ValueError):
    """A record or file violates its invariants."""


class SchemaError(ValidationError):
    """A JSON document does not match the expected schema."""


class FormatError(ValidationError):
    """A binary file is malformed."""


class PlanningError(LoopshotError, ValueError):
    """The ring cannot be tiled by the requested windows.

    ``nearest`` holds the two closest frame counts that would tile.
    """

    def __init__(self, message, nearest=()):
        super().__init__(message)
        self.nearest = tuple(nearest)


class ContractViolation(LoopshotError, RuntimeError):
    """A denoiser returned something the scheduler cannot use."""
