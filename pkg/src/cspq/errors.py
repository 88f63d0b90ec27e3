"""Exception hierarchy shared by every module."""


class CspqError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(CspqError, ValueError):
    """Shapes or dimensions do not agree."""


class StructuralError(CspqError, ValueError):
    """A document or object is missing a required part."""


class MissingInitialTimeError(StructuralError):
    """A kernel or family lacks the t=0 snapshot."""


class UnknownTimeError(CspqError, KeyError):
    """A requested time is not one of the sampled time points."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown time"


class PreconditionError(CspqError, ValueError):
    """An operation was called on input that violates its precondition."""


class TruncationError(CspqError, RuntimeError):
    """A countable configuration space could not be truncated."""


class NotConfigurationDiagonalError(PreconditionError):
    """An operator has off-diagonal mass in the configuration basis."""


class NotSelfAdjointError(PreconditionError):
    """An operator is not Hermitian within tolerance."""
