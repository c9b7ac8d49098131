"""Exception types shared across the package."""

from __future__ import annotations


class CorrModesError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CorrModesError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConflictError(CorrModesError):
    """Duplicate ticker/date where uniqueness is required."""


class LeadingGapError(CorrModesError):
    """A ticker has no price at its first covered date, so it cannot be forward-filled."""


class ZeroVarianceError(CorrModesError):
    """A return series is constant; it cannot be normalized to unit variance."""


class ConvergenceError(CorrModesError):
    """An iterative numerical routine did not reach its tolerance within budget."""


class StageError(CorrModesError):
    """A pipeline stage failed; names the stage and wraps the cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
