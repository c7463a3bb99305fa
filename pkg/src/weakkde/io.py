"""CSV ingestion and emission."""

from __future__ import annotations

import csv
import math
from importlib import resources
from pathlib import Path

from .errors import DataFileNotFound, ParseError, UnknownColumn
from .sample import Sample


def data_path(name: str) -> Path:
    """Path of a dataset shipped with the package (e.g. ``faithful.csv``)."""
    return Path(str(resources.files("weakkde") / "data" / name))


def read_table(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Header and numeric rows of a CSV; empty cells become NaN."""
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataFileNotFound(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        rows = []
        for k, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(rec)}", k)
            rows.append([_cell(c, k, header[j]) for j, c in enumerate(rec)])
    return header, rows


def _cell(text: str, row: int, column: str, allow_empty: bool = True) -> float:
    text = text.strip()
    if not text:
        if allow_empty:
            return math.nan
        raise ParseError(f"column {column!r}: empty cell", row)
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: {text!r} is not a number", row) from None


def ingest_csv(path: str | Path, column: str) -> Sample:
    """One named column as a univariate sample (rows counted from 1 after the header)."""
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataFileNotFound(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        if column not in header:
            raise UnknownColumn(f"column {column!r} not in {header}")
        j = header.index(column)
        values = []
        for k, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if j >= len(rec):
                raise ParseError(f"missing column {column!r}", k)
            values.append(_cell(rec[j], k, column, allow_empty=False))
    return Sample(values, generator_id="file")


def format_real(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.17g}"


def write_rows(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
