"""Strict CSV panel ingestion.

One date column (ISO-8601 YYYY-MM-DD), one target column, any number of
factor columns. Rows are sorted by date; duplicate dates, gaps against a
declared frequency, malformed numerics and missing values are hard errors
naming the offending row and column. Nothing is ever imputed: silent
imputation corrupts signatures.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DataError
from .pipeline import FactorPanel

_FREQUENCIES = ("daily", "weekly", "monthly")


def _parse_date(cell: str, line: int) -> dt.date:
    text = cell.strip()
    try:
        if len(text) != 10:
            raise ValueError
        return dt.date.fromisoformat(text)
    except ValueError:
        raise DataError(f"line {line}: malformed date {cell!r}, expected YYYY-MM-DD") from None


def _parse_number(cell: str, line: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise DataError(f"line {line}, column {column!r}: missing value")
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {line}, column {column!r}: malformed numeric cell {cell!r}") from None
    if not np.isfinite(value):
        raise DataError(f"line {line}, column {column!r}: non-finite value {cell!r}")
    return value


def _check_gaps(dates: Sequence[dt.date], frequency: str) -> None:
    bad: list[str] = []
    if frequency == "monthly":
        for a, b in zip(dates, dates[1:]):
            if (b.year * 12 + b.month) - (a.year * 12 + a.month) != 1:
                bad.append(f"{a.isoformat()} -> {b.isoformat()}")
    else:
        step = 1 if frequency == "daily" else 7
        for a, b in zip(dates, dates[1:]):
            if (b - a).days != step:
                bad.append(f"{a.isoformat()} -> {b.isoformat()}")
    if bad:
        shown = ", ".join(bad[:5]) + (", ..." if len(bad) > 5 else "")
        raise DataError(f"date gaps for declared frequency {frequency!r}: {shown}")


def ingest_csv(
    source: str | TextIO,
    date_column: str = "date",
    target_column: str = "y",
    factor_columns: Sequence[str] | None = None,
    exclude_columns: Iterable[str] = (),
    frequency: str | None = None,
) -> FactorPanel:
    """Load and validate a panel from a CSV file or open text stream.

    factor_columns, when given, is an allowlist (all must exist); otherwise
    every column except date, target and the excludes becomes a factor.
    """
    if frequency is not None and frequency not in _FREQUENCIES:
        raise DataError(f"unknown frequency {frequency!r}; expected one of {_FREQUENCIES}")
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return ingest_csv(
                fh, date_column, target_column, factor_columns, exclude_columns, frequency
            )

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty file: header row required") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    if date_column not in header:
        raise DataError(f"date column {date_column!r} not found in header {header}")
    if target_column not in header:
        raise DataError(f"target column {target_column!r} not found in header {header}")
    excluded = set(exclude_columns)
    if factor_columns is not None:
        missing = [c for c in factor_columns if c not in header]
        if missing:
            raise DataError(f"factor columns not in header: {missing}")
        factors = [c for c in factor_columns if c not in excluded]
        if date_column in factors or target_column in factors:
            raise DataError("date/target columns cannot be factors")
    else:
        factors = [
            c for c in header if c not in (date_column, target_column) and c not in excluded
        ]

    date_pos = header.index(date_column)
    target_pos = header.index(target_column)
    factor_pos = [header.index(c) for c in factors]

    records: list[tuple[dt.date, float, list[float]]] = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} cells, got {len(row)}")
        date = _parse_date(row[date_pos], line)
        target = _parse_number(row[target_pos], line, target_column)
        values = [_parse_number(row[pos], line, header[pos]) for pos in factor_pos]
        records.append((date, target, values))
    if not records:
        raise DataError("no data rows")

    records.sort(key=lambda r: r[0])
    for a, b in zip(records, records[1:]):
        if a[0] == b[0]:
            raise DataError(f"duplicate date {a[0].isoformat()}")
    if frequency is not None:
        _check_gaps([r[0] for r in records], frequency)

    return FactorPanel(
        dates=tuple(r[0].isoformat() for r in records),
        target=np.array([r[1] for r in records]),
        factors=np.array([r[2] for r in records]).reshape(len(records), len(factors)),
        factor_names=tuple(factors),
        target_name=target_column,
    )


def panel_to_csv(panel: FactorPanel, date_column: str = "date") -> str:
    """Render a panel as CSV text (LF endings, '.' decimals, %.12g floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([date_column, panel.target_name, *panel.factor_names])
    for i, date in enumerate(panel.dates):
        writer.writerow(
            [date, format(panel.target[i], ".12g")]
            + [format(v, ".12g") for v in panel.factors[i]]
        )
    return buf.getvalue()
