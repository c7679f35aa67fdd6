"""Exception types shared across the package.

The CLI maps these onto exit codes: data/format problems exit 2, numeric
failures exit 3 (see ``adascan.cli``).
"""

from __future__ import annotations


class AdascanError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(AdascanError):
    """A data file violates the documented format.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class UnknownWordError(AdascanError):
    """A held-out document contains word ids outside the model vocabulary."""

    def __init__(self, word_ids):
        self.word_ids = sorted(int(w) for w in word_ids)
        super().__init__(f"word ids outside vocabulary: {self.word_ids}")


class NumericError(AdascanError):
    """Base class for numeric failures (CLI exit code 3)."""


class DegenerateSeriesError(NumericError):
    """A sample series has zero variance, so autocorrelation is undefined."""


class NotPositiveDefiniteError(NumericError):
    """A matrix required to be positive definite is not.

    ``pivot`` is the 0-based index of the first failing leading minor.
    """

    def __init__(self, pivot: int, message: str = ""):
        self.pivot = pivot
        detail = message or "matrix is not positive definite"
        super().__init__(f"{detail} (failing pivot {pivot})")


class ScanError(NumericError):
    """A model update failed while running the scan; carries the cycle index."""

    def __init__(self, cycle: int, phase: str, detail: str):
        self.cycle = cycle
        self.phase = phase
        super().__init__(f"{phase} update failed at cycle {cycle}: {detail}")


class AdaptationError(NumericError):
    """Every arm of the adaptation grid failed to produce a usable objective."""
