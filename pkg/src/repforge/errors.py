"""Shared exception types."""


class RepforgeError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(RepforgeError, ValueError):
    """Vector length does not match the ambient group."""


class RelatorViolation(RepforgeError, ValueError):
    """Candidate generator images do not satisfy the group's relators."""


class NotAnEmbedding(RepforgeError, ValueError):
    """A map fails to preserve and reflect structure."""


class PreconditionError(RepforgeError, ValueError):
    """An operation's documented precondition does not hold."""


class CapExceeded(RepforgeError, RuntimeError):
    """A construction grew past its configured point cap."""


class BudgetExceeded(RepforgeError, RuntimeError):
    """A verified search exhausted its budget before finding a witness.

    ``largest_tried`` reports the largest schedule cost examined, so the
    caller can retry with a bigger budget.
    """

    def __init__(self, message, largest_tried=None):
        super().__init__(message)
        self.largest_tried = largest_tried


class WindowTooShort(RepforgeError, RuntimeError):
    """A truncated-window construction ran off the decided prefix.

    ``needed_length`` is a lower bound on the window that would suffice.
    """

    def __init__(self, message, needed_length=None):
        super().__init__(message)
        self.needed_length = needed_length
