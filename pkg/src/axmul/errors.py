"""
Exception types raised by the axmul library.

Each type derives from the built-in exception a caller would expect
for the failure, so ``except ValueError`` keeps working.
"""


class WidthError(ValueError):
    """Operand width is odd, out of range, or does not match."""


class ConfigError(ValueError):
    """Multiplier configuration is malformed or out of bounds."""


class MaskError(ValueError):
    """Runtime mask is not a canonical low-run mask."""


class FpDomainError(ValueError):
    """Floating-point operand is outside the modeled (normal) domain."""


class PgmFormatError(ValueError):
    """PGM header is malformed or its payload is truncated."""


class AssignmentError(KeyError):
    """An assignment scheme does not cover a unit of the network."""


class EnergyTableError(KeyError):
    """A configuration has no entry in the energy table."""


class InfeasibleTransitionError(AssertionError):
    """Accurate and approximate products classified into an impossible pair."""
