"""Exception types raised by the engine.

All of them derive from :class:`ValueError` so callers that only care about
"bad input" can catch one thing.
"""


class KPError(ValueError):
    """Base class for domain errors."""


class WindowError(KPError):
    """A truncation window is empty or does not contain a requested order."""


class NotInvertibleError(KPError):
    """Series or operator has no inverse in the relevant ring."""


class TruncationError(KPError):
    """The truncation floor of an operator is too shallow for the request."""


class BigCellError(KPError):
    """Operator is not monic of order 0, or a point is outside the big cell."""


class SpLocusError(KPError):
    """Dressing operator violates the twisted self-adjointness condition."""


class RamifiedError(KPError):
    """Characteristic polynomial has a repeated root at the base point."""


class IrrationalBranchError(KPError):
    """A root at the base point lies outside the coefficient field."""
