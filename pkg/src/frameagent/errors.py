"""Exception types shared across backend boundaries."""

from __future__ import annotations


class BackendError(RuntimeError):
    """A model, embedding, or caption backend failed unrecoverably."""


class ParseFailure(ValueError):
    """A model response did not contain the expected literal."""
