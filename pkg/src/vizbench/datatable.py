"""Tabular data container and CSV ingestion.

Columns carry an inferred kind (text, integer, real, datetime) decided by
whole-column parse attempts; empty cells become None and never veto a kind.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

KINDS = ("text", "integer", "real", "datetime")

Value = str | int | float | datetime | None


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass
class DataTable:
    name: str
    columns: list[Column]
    rows: list[tuple] = field(default_factory=list)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def kind_of(self, name: str) -> str | None:
        for c in self.columns:
            if c.name == name:
                return c.kind
        return None

    def column_values(self, name: str) -> list[Value]:
        idx = self.column_names().index(name)
        return [row[idx] for row in self.rows]

    def as_dicts(self) -> list[dict[str, Value]]:
        names = self.column_names()
        return [dict(zip(names, row)) for row in self.rows]


# ---------------------------------------------------------------------------
# parsing helpers


def parse_datetime(text: str) -> datetime | None:
    """ISO-8601 dates and datetimes, with 'T' or space separators."""
    raw = text.strip()
    if not raw or not any(ch.isdigit() for ch in raw[:4]):
        return None
    for converter in (datetime.fromisoformat,):
        try:
            return converter(raw)
        except ValueError:
            pass
    # fromisoformat before 3.11 rejects some legitimate forms; try the
    # explicit patterns the corpus actually contains
    for pattern in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d"):
        try:
            return datetime.strptime(raw, pattern)
        except ValueError:
            pass
    return None


def _parse_int(text: str) -> int | None:
    raw = text.strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def _parse_real(text: str) -> float | None:
    raw = text.strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        return None


def infer_kind(cells: list[str]) -> str:
    """Pick the narrowest kind into which every non-empty cell parses.

    Order of attempts is integer, real, datetime, then text as the catch-all.
    A column of only empty cells is text.
    """
    present = [c for c in cells if c.strip() != ""]
    if not present:
        return "text"
    if all(_parse_int(c) is not None for c in present):
        return "integer"
    if all(_parse_real(c) is not None for c in present):
        return "real"
    if all(parse_datetime(c) is not None for c in present):
        return "datetime"
    return "text"


def _convert(cell: str, kind: str) -> Value:
    if cell.strip() == "":
        return None
    if kind == "integer":
        return _parse_int(cell)
    if kind == "real":
        return _parse_real(cell)
    if kind == "datetime":
        return parse_datetime(cell)
    return cell


def table_from_cells(name: str, header: list[str], cells: list[list[str]]) -> DataTable:
    kinds = [infer_kind([row[i] if i < len(row) else "" for row in cells]) for i in range(len(header))]
    columns = [Column(h, k) for h, k in zip(header, kinds)]
    rows = [
        tuple(_convert(row[i] if i < len(row) else "", kinds[i]) for i in range(len(header)))
        for row in cells
    ]
    return DataTable(name=name, columns=columns, rows=rows)


def load_csv(path: str | Path, name: str | None = None) -> DataTable:
    """Read an RFC-4180 CSV file with a header row into a DataTable."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        cells = [row for row in reader]
    return table_from_cells(name or path.stem, header, cells)


def load_csv_text(text: str, name: str = "table") -> DataTable:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ValueError("empty CSV text")
    return table_from_cells(name, rows[0], rows[1:])


def render_value(value: Value) -> str:
    """Canonical cell text used when a table is re-rendered to CSV."""
    if value is None:
        return ""
    if isinstance(value, datetime):
        if value.hour == 0 and value.minute == 0 and value.second == 0 and value.microsecond == 0:
            return value.strftime("%Y-%m-%d")
        return value.strftime("%Y-%m-%d %H:%M:%S")
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def render_csv(table: DataTable, max_rows: int | None = None) -> str:
    """Render header plus the first ``max_rows`` rows as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.column_names())
    rows = table.rows if max_rows is None else table.rows[:max_rows]
    for row in rows:
        writer.writerow([render_value(v) for v in row])
    return buf.getvalue()
