"""Exception types shared across the toolkit.

Exit-code mapping used by the CLI: ValidationError and ConfigurationError
are user/input problems (exit 1); TransportError and plain OSError are
I/O or network problems (exit 2).
"""

from __future__ import annotations


class ClaimSpanError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ClaimSpanError):
    """Input data violates a documented invariant."""


class JsonlError(ValidationError):
    """A JSONL file has a malformed or invalid line."""

    def __init__(self, message: str, path: str = "", line_no: int = 0):
        self.path = path
        self.line_no = line_no
        prefix = f"{path}:{line_no}: " if path or line_no else ""
        super().__init__(prefix + message)


class PharaohError(ValidationError):
    """An alignment file has a malformed line."""

    def __init__(self, message: str, path: str = "", line_no: int = 0):
        self.path = path
        self.line_no = line_no
        prefix = f"{path}:{line_no}: " if path or line_no else ""
        super().__init__(prefix + message)


class ConfigurationError(ClaimSpanError):
    """A config value or combination of options is unusable."""


class SegmentationError(ClaimSpanError):
    """Text cannot be segmented (empty or whitespace-only)."""


class NoAlignmentError(ClaimSpanError):
    """No alignment links were produced, so no span can be derived."""

    def __init__(self, message: str = "no alignment links", post_id: str = ""):
        self.post_id = post_id
        if post_id:
            message = f"{message} (post {post_id})"
        super().__init__(message)


class EmptyResponseError(ClaimSpanError):
    """A model response was empty after trimming."""


class TransportError(ClaimSpanError):
    """A network call failed after exhausting retries."""
