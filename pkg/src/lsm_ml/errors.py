"""Exception types raised across the package.

Every error derives from :class:`LsmError` (itself a ``ValueError``) so callers
can catch the whole family at once.
"""

from __future__ import annotations


class LsmError(ValueError):
    pass


class NotPositiveDefinite(LsmError):
    pass


class DimensionMismatch(LsmError):
    pass


class NotFittedError(LsmError):
    pass


class SingularSystem(LsmError):
    pass


class KTooLarge(LsmError):
    pass


class NonBinaryLabels(LsmError):
    pass


class EstimatorFailure(LsmError):
    """An estimator failed inside the backward induction.

    ``step`` is the time index at which the fit or prediction broke.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class EmptyDataset(LsmError):
    pass


class LengthMismatch(LsmError):
    pass


class NonBinaryInput(LsmError):
    pass


class ShapeMismatch(LsmError):
    pass


class InsufficientData(LsmError):
    pass


class TooFewRows(LsmError):
    pass


class QuoteParseError(LsmError):
    """Base for CSV quote problems; carries the 1-based data row number."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.row = row
        self.column = column
        self.reason = message


class MissingColumn(QuoteParseError):
    pass


class FieldTypeError(QuoteParseError):
    pass


class InvalidQuote(QuoteParseError):
    pass


class CrossedMarket(InvalidQuote):
    pass


class TrainingDiverged(LsmError):
    pass
