"""Query-focused literature mining: retrieval, evidence re-ranking, summarization."""

__version__ = "0.1.0"


class LitrankError(Exception):
    """Base class for errors raised by this package."""


class CorpusError(LitrankError):
    """Raised for unusable corpus inputs (missing store, bad layout)."""


class EmptyCorpusError(CorpusError):
    """Raised when an ingest source yields no valid documents."""


class BackendUnavailableError(LitrankError):
    """A remote or builtin model backend could not produce a result.

    Carries the backend role so callers can report which side of an
    ensemble failed.
    """

    def __init__(self, role: str, message: str = ""):
        self.role = role
        super().__init__(message or f"backend unavailable: {role}")


class ProtocolError(LitrankError):
    """A remote backend answered with a malformed payload."""

    def __init__(self, message: str, role: str = "unknown"):
        self.role = role
        super().__init__(message)


class SpanValidationError(LitrankError):
    """An answer span does not fit inside its paragraph."""
