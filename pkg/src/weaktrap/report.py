"""CSV artifacts: a ``#``-prefixed manifest followed by one or more tables.

Layout::

    # weaktrap-manifest
    # command: simulate
    # seed: 7
    # table: ensemble
    system,scheme,...
    ou,wt,...

Floats are written with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

ENSEMBLE_COLUMNS = (
    "system", "scheme", "theta", "h", "T", "n_paths", "seed", "functional",
    "mean", "stderr", "exact", "error", "degenerate_fraction",
)
FIT_COLUMNS = ("scheme", "theta", "slope", "intercept", "r_squared", "n_points")
FRACTION_COLUMNS = ("system", "theta", "h", "T", "n_paths", "seed", "degenerate_fraction")
MANIFEST_TAG = "weaktrap-manifest"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns for table {self.name!r}: {sorted(unknown)}")
        self.rows.append(row)


def render(manifest: dict, tables: list[Table]) -> str:
    buf = io.StringIO()
    buf.write(f"# {MANIFEST_TAG}\n")
    for key, value in manifest.items():
        buf.write(f"# {key}: {fmt(value)}\n")
    for table in tables:
        buf.write(f"# table: {table.name}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([fmt(row.get(c)) for c in table.columns])
    return buf.getvalue()


def _parse_cell(text: str):
    if text == "":
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse(text: str) -> tuple[dict, dict[str, list[dict]]]:
    """Inverse of :func:`render`: ``(manifest, {table name: rows})``.

    Numeric cells come back as int/float and empty cells as ``None``.
    """
    lines = text.splitlines()
    if not lines or lines[0] != f"# {MANIFEST_TAG}":
        raise ValueError("not a weaktrap CSV: missing manifest tag")
    manifest: dict = {}
    tables: dict[str, list[dict]] = {}
    current = None
    header = None
    for line in lines[1:]:
        if line.startswith("# table: "):
            current = line[len("# table: "):]
            tables[current] = []
            header = None
        elif line.startswith("# "):
            if current is not None:
                raise ValueError(f"manifest line after table start: {line!r}")
            key, _, value = line[2:].partition(": ")
            manifest[key] = _parse_cell(value)
        elif current is None:
            raise ValueError(f"data before any table: {line!r}")
        else:
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                tables[current].append(dict(zip(header, map(_parse_cell, cells))))
    return manifest, tables


def read_csv(path) -> tuple[dict, dict[str, list[dict]]]:
    with open(path, newline="") as fh:
        return parse(fh.read())
