"""Exception hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` so the service layer
can map failures onto its error envelope without string matching.
"""

from __future__ import annotations


class FeedLabError(Exception):
    """Base class for all package errors."""

    code = "error"


class ValidationError(FeedLabError):
    """Input violates a documented precondition or invariant."""

    code = "validation"


class ParseError(FeedLabError):
    """A document could not be parsed; mentions the offending record."""

    code = "parse"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class CapacityError(FeedLabError):
    """A sampling request exceeds what the corpus can supply."""

    code = "capacity"


class StateError(FeedLabError):
    """Operation invoked in a state that does not admit it."""

    code = "state"


class MonotonicityError(ValidationError):
    """Session-relative time went backwards."""

    code = "monotonicity"


class EmptyWindowError(FeedLabError):
    """A time window contains no qualifying events."""

    code = "empty_window"


class CapabilityError(FeedLabError):
    """The session's condition does not grant this capability."""

    code = "capability"


class ProviderError(FeedLabError):
    """Remote generation failed after retry; caller should fall back."""

    code = "provider"


class NotFoundError(FeedLabError):
    """Unknown session or resource."""

    code = "not_found"
