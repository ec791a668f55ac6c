"""Exception types shared across the package."""


class OacError(Exception):
    """Base class for all package errors."""


class ValidationError(OacError, ValueError):
    """Invalid configuration or argument."""


class ComplexityGuardError(OacError, RuntimeError):
    """A computation was refused because it exceeds its work budget."""


class PrecisionExhaustedError(OacError, ArithmeticError):
    """The finite-precision coding window became too narrow to split."""


class DecodeFailure(OacError, RuntimeError):
    """A bitstream or coset index could not be decoded."""
