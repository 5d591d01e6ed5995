"""Exception hierarchy.

Validation problems (bad arguments, incompatible layouts) derive from
``ValueError``; numerical guard violations (truncation leakage, dimension
limits, degenerate conditioning) derive from ``NumericalGuardError``.  The CLI
maps the two families to different exit codes.
"""


class QiopaError(Exception):
    """Base class for all library errors."""


class ValidationError(QiopaError, ValueError):
    """Invalid argument or parameter value."""


class OutOfRangeError(ValidationError):
    """Occupation number above the layout cutoff."""


class LayoutError(ValidationError):
    """Incompatible or invalid mode layout."""


class NumericalGuardError(QiopaError):
    """A numerical guard was violated."""


class TruncationError(NumericalGuardError):
    """Fock-space cutoff too small for the requested truncation budget."""


class DimensionGuardError(NumericalGuardError):
    """Dense mixed-state operation requested beyond the dimension limit."""


class DegenerateOutcomeError(NumericalGuardError):
    """Conditioning on an event of zero probability."""
