"""Errors shared by the numerical apps."""


class OzakiError(Exception):
    """Base class for every error raised by this project."""


class RangeError(OzakiError, ArithmeticError):
    """An FP64 operand or result left the normal finite range (or was NaN/infinite)."""


class SlicingInfeasible(OzakiError):
    """Type2 cannot retain the slices for the requested parameters."""


class RepresentabilityError(OzakiError, ValueError):
    """A value is not exactly representable in the format it is declared in."""


class DimensionError(OzakiError, ValueError):
    """Matrix shapes do not conform."""
