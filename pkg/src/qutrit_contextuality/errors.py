"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ContextualityError(Exception):
    """Base class for all package errors."""


class InvariantError(ContextualityError, ValueError):
    """A value violates a structural invariant of its type."""


class GraphParseError(ContextualityError, ValueError):
    """Malformed edge-list or measurement-set text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SizeLimitError(ContextualityError, ValueError):
    """Input is larger than an exhaustive routine is allowed to handle."""


class OutOfRangeError(ContextualityError, ValueError):
    """A parameter lies outside the interval where a family is defined."""


class UnsupportedArcError(ContextualityError, ValueError):
    """No closed form is available for the requested arc."""


class InfeasibleError(ContextualityError, RuntimeError):
    """No multistart run reached the feasibility tolerance."""
