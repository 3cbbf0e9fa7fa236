"""Exception types shared across the package."""

from __future__ import annotations


class IccnlsError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(IccnlsError):
    """Array shapes are inconsistent (ragged rows, wrong width, length clash)."""


class NonFiniteValue(IccnlsError):
    """NaN or infinity found where finite numbers are required."""


class EmptyInput(IccnlsError):
    """An operation received an empty vector, grid, or piece list."""


class UnsupportedCombination(IccnlsError):
    """Internally inconsistent assembly request (e.g. l1 weight without split layout)."""


class TooLarge(IccnlsError):
    """Problem exceeds the size envelope of the dense reference solver."""


class InfeasibleProblem(IccnlsError):
    """No feasible point exists (or none could be located) for the given constraints."""


class SolverFailed(IccnlsError):
    """A fit did not reach Optimal status.

    Carries the partial results so callers can still persist/flag them:
    ``model`` (or ``surface`` for the single-component fit) and ``report``.
    """

    def __init__(self, message: str, *, model=None, report=None):
        super().__init__(message)
        self.model = model
        self.report = report


class MissingColumn(IccnlsError):
    """A column named in the column specs is absent from the CSV header."""


class UnparsableNumeric(IccnlsError):
    """A cell declared numeric could not be parsed as a float."""


class EmptyFile(IccnlsError):
    """CSV input has a header but no data rows, or is empty altogether."""


class CorruptModel(IccnlsError):
    """Model file failed schema or version validation."""


class IndexMisalignment(IccnlsError):
    """Pieces and observations do not line up one-to-one."""


class FingerprintMismatch(IccnlsError):
    """Two models being compared were trained on different data or dimensions."""
