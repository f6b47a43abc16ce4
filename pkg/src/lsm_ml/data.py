"""Options-chain quote files: parsing, validation, correlations and splits.

The interchange format is a UTF-8 CSV with the header in :data:`QUOTE_COLUMNS`.
Numbers use a dot decimal separator and dates are ISO ``YYYY-MM-DD``. Numeric
cells other than ``strike``, ``bid`` and ``ask`` may be left empty; they are
stored as NaN and skipped pairwise by :func:`correlation_matrix`.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CrossedMarket, FieldTypeError, InvalidQuote, MissingColumn, QuoteParseError, TooFewRows

QUOTE_COLUMNS = (
    "contract", "underlying", "expiration", "type", "strike", "style", "bid", "bid_size",
    "ask", "ask_size", "volume", "open_interest", "quote_date", "delta", "gamma", "theta",
    "vega", "implied_volatility",
)
TEXT_COLUMNS = ("contract", "underlying", "style")
DATE_COLUMNS = ("expiration", "quote_date")
NUMERIC_COLUMNS = (
    "strike", "bid", "bid_size", "ask", "ask_size", "volume", "open_interest",
    "delta", "gamma", "theta", "vega", "implied_volatility",
)
REQUIRED_NUMERIC = ("strike", "bid", "ask")
NON_NEGATIVE = ("bid_size", "ask_size", "volume", "open_interest", "implied_volatility")
OPTION_TYPES = ("call", "put")


@dataclass(frozen=True)
class OptionQuoteRecord:
    contract: str
    underlying: str
    expiration: dt.date
    type: str
    strike: float
    style: str
    bid: float
    bid_size: float
    ask: float
    ask_size: float
    volume: float
    open_interest: float
    quote_date: dt.date
    delta: float
    gamma: float
    theta: float
    vega: float
    implied_volatility: float

    def numeric(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in NUMERIC_COLUMNS)


@dataclass(frozen=True)
class Diagnostic:
    row: int
    column: str | None
    reason: str


@dataclass(frozen=True)
class QuoteTable:
    """Validated quotes plus a float matrix of the numeric columns (NaN = missing)."""

    records: tuple[OptionQuoteRecord, ...]
    diagnostics: tuple[Diagnostic, ...] = ()
    row_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.row_ids:
            object.__setattr__(self, "row_ids", tuple(range(1, len(self.records) + 1)))
        values = np.array([r.numeric() for r in self.records], dtype=float).reshape(-1, len(NUMERIC_COLUMNS))
        values.setflags(write=False)
        object.__setattr__(self, "_values", values)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def numeric_columns(self) -> tuple[str, ...]:
        return NUMERIC_COLUMNS

    def column(self, name: str) -> np.ndarray:
        try:
            j = NUMERIC_COLUMNS.index(name)
        except ValueError:
            raise MissingColumn(f"{name!r} is not a numeric column", column=name) from None
        return self._values[:, j]

    def matrix(self, columns=None) -> np.ndarray:
        columns = NUMERIC_COLUMNS if columns is None else tuple(columns)
        return np.column_stack([self.column(c) for c in columns]) if columns else np.empty((len(self), 0))

    def subset(self, indices) -> "QuoteTable":
        idx = [int(i) for i in indices]
        return QuoteTable(tuple(self.records[i] for i in idx), (), tuple(self.row_ids[i] for i in idx))


def _parse_float(text: str, row: int, column: str, required: bool) -> float:
    text = text.strip()
    if text == "":
        if required:
            raise FieldTypeError("value is required", row, column)
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise FieldTypeError(f"{text!r} is not a number", row, column) from None
    if not math.isfinite(value):
        raise FieldTypeError(f"{text!r} is not finite", row, column)
    return value


def _parse_date(text: str, row: int, column: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise FieldTypeError(f"{text!r} is not an ISO date", row, column) from None


def _parse_row(raw: dict, row: int) -> OptionQuoteRecord:
    values = {}
    for c in TEXT_COLUMNS:
        values[c] = raw[c].strip()
    for c in DATE_COLUMNS:
        values[c] = _parse_date(raw[c], row, c)
    kind = raw["type"].strip().lower()
    if kind not in OPTION_TYPES:
        raise FieldTypeError(f"{raw['type']!r} is not call or put", row, "type")
    values["type"] = kind
    for c in NUMERIC_COLUMNS:
        values[c] = _parse_float(raw[c], row, c, c in REQUIRED_NUMERIC)
    if not values["strike"] > 0:
        raise InvalidQuote("strike must be positive", row, "strike")
    if values["bid"] < 0:
        raise InvalidQuote("bid must be non-negative", row, "bid")
    if values["bid"] > values["ask"]:
        raise CrossedMarket(f"bid {values['bid']!r} above ask {values['ask']!r}", row, "bid")
    for c in NON_NEGATIVE:
        if values[c] < 0:
            raise InvalidQuote("must be non-negative", row, c)
    return OptionQuoteRecord(**values)


def parse_quotes(stream, strict: bool = True) -> QuoteTable:
    """Parse a quote CSV from a text stream.

    Rows are numbered from 1 after the header. With ``strict`` the first bad
    row raises; otherwise bad rows are skipped and each one is listed in
    ``QuoteTable.diagnostics``. A missing header column always raises.
    """
    reader = csv.DictReader(stream)
    header = reader.fieldnames
    if header is None:
        raise MissingColumn("empty file, header row expected")
    header = [h.strip() for h in header]
    reader.fieldnames = header
    missing = [c for c in QUOTE_COLUMNS if c not in header]
    if missing:
        raise MissingColumn(f"header lacks {', '.join(missing)}", column=missing[0])
    records, diagnostics, ids = [], [], []
    for row, raw in enumerate(reader, start=1):
        try:
            if None in raw or any(raw[c] is None for c in QUOTE_COLUMNS):
                raise FieldTypeError("wrong number of fields", row)
            records.append(_parse_row(raw, row))
            ids.append(row)
        except QuoteParseError as exc:
            if strict:
                raise
            diagnostics.append(Diagnostic(row, exc.column, exc.reason))
    return QuoteTable(tuple(records), tuple(diagnostics), tuple(ids))


def read_quotes(path, strict: bool = True) -> QuoteTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_quotes(fh, strict=strict)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    if isinstance(value, dt.date):
        return value.isoformat()
    return str(value)


def write_quotes(table: QuoteTable, stream) -> None:
    """Serialise with ``repr`` floats so a parse reproduces every value bit-exactly."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(QUOTE_COLUMNS)
    for rec in table.records:
        writer.writerow([_format_cell(getattr(rec, c)) for c in QUOTE_COLUMNS])


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson matrix; NaN marks pairs that are undefined (constant column or < 2 shared rows)."""

    matrix: np.ndarray
    columns: tuple[str, ...]
    constant_columns: tuple[str, ...]

    def write_csv(self, stream, undefined: str = "undefined") -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["", *self.columns])
        for name, row in zip(self.columns, self.matrix):
            writer.writerow([name, *(undefined if math.isnan(v) else repr(float(v)) for v in row)])


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    mask = ~(np.isnan(x) | np.isnan(y))
    if mask.sum() < 2:
        return math.nan
    x, y = x[mask], y[mask]
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def correlation_matrix(table: QuoteTable, columns=None) -> CorrelationResult:
    """Pairwise-complete two-pass Pearson correlations between numeric columns.

    Defaults to every numeric column. A column with zero variance over its
    non-missing values gets NaN in its whole row and column, diagonal included.
    """
    columns = NUMERIC_COLUMNS if columns is None else tuple(columns)
    for c in columns:
        if c not in NUMERIC_COLUMNS:
            raise MissingColumn(f"{c!r} is not a numeric column", column=c)
    data = table.matrix(columns)
    k = len(columns)
    out = np.full((k, k), math.nan)
    constant = []
    for a in range(k):
        col = data[:, a]
        present = col[~np.isnan(col)]
        if present.size >= 2 and np.ptp(present) == 0:
            constant.append(columns[a])
            continue
        if present.size >= 2:
            out[a, a] = 1.0
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = _pearson(col, data[:, b])
    for name in constant:
        j = columns.index(name)
        out[j, :] = math.nan
        out[:, j] = math.nan
    return CorrelationResult(out, columns, tuple(constant))


def train_val_split(table: QuoteTable, fraction: float = 0.8, seed: int = 0):
    """Seeded shuffle, first ``ceil(fraction * n)`` rows train, the rest validate."""
    n = len(table)
    if n < 2:
        raise TooFewRows(f"need at least 2 rows to split, got {n}")
    if not 0 < fraction < 1:
        raise TooFewRows("fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    cut = math.ceil(fraction * n)
    return table.subset(perm[:cut]), table.subset(perm[cut:])
