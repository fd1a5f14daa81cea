"""Exception hierarchy shared by the package and mapped to CLI exit codes."""


class RRRLError(Exception):
    """Base class for all package errors."""


class ImageIOError(RRRLError, OSError):
    """Malformed or unsupported raster/kernel file.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DomainError(RRRLError, ValueError):
    """Argument outside the domain of a function (e.g. log of a nonpositive value)."""


class ShapeError(RRRLError, ValueError):
    """Incompatible or unsupported array shape."""


class NumericalError(RRRLError, ArithmeticError):
    """Base class for failures of an iterative scheme."""


class StabilityError(NumericalError):
    """Fixed-point denominator became nonpositive."""


class StepSizeError(NumericalError):
    """Explicit descent step left the admissible (positive) range."""


class DivergenceError(NumericalError):
    """Iterate became non-finite."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
