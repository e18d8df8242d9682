"""Plain tabular output: CSV with a header row, or JSON ``{meta, columns, rows}``."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

SCHEMA_VERSION = 1


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]


def _cell(x):
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if hasattr(x, "item"):
        return _cell(x.item())
    return x


def _csv_text(x) -> str:
    x = _cell(x)
    if x is None:
        return "nan"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def dumps(table: Table, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_csv_text(x) for x in row])
        return buf.getvalue()
    if fmt == "json":
        meta = {"schema_version": SCHEMA_VERSION, **table.meta}
        doc = {"meta": meta, "columns": list(table.columns),
               "rows": [[_cell(x) for x in row] for row in table.rows]}
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_table(table: Table, out: str | Path | IO[str] | None, fmt: str) -> None:
    text = dumps(table, fmt)
    if out is None or out == "-":
        import sys

        sys.stdout.write(text)
    elif hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def _parse_csv_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def loads(text: str, fmt: str | None = None) -> Table:
    """Parse text written by :func:`dumps`; the format is sniffed if not given."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        doc = json.loads(text)
        version = doc.get("meta", {}).get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported table schema version {version!r}")
        rows = [[math.nan if x is None else x for x in row] for row in doc["rows"]]
        return Table(list(doc["columns"]), rows, dict(doc["meta"]))
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        rows = [[_parse_csv_cell(c) for c in row] for row in reader if row]
        return Table(header, rows, {})
    raise ValueError(f"unknown format {fmt!r}")


def read_table(path: str | Path, fmt: str | None = None) -> Table:
    p = Path(path)
    if fmt is None and p.suffix.lower() in (".csv", ".json"):
        fmt = p.suffix.lower()[1:]
    return loads(p.read_text(), fmt)


def from_columns(names: Sequence[str], *cols, meta: dict | None = None) -> Table:
    rows = [list(r) for r in zip(*cols)]
    return Table(list(names), rows, dict(meta or {}))
