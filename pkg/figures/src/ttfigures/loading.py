"""CSV loading against the versioned simulation output schema.

These scripts are read-only consumers: they never recompute physics and fail
fast, naming the offending column, when a file does not match the schema.
"""

from __future__ import annotations

import csv
from pathlib import Path


class SchemaError(ValueError):
    """Input file does not match the expected CSV schema."""


def load_table(path, required_columns: tuple[str, ...]) -> dict[str, list]:
    """Read a CSV into columns, requiring every column in required_columns."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        for column in required_columns:
            if column not in reader.fieldnames:
                raise SchemaError(f"{path}: missing required column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    table: dict[str, list] = {name: [] for name in reader.fieldnames}
    for row in rows:
        for name in reader.fieldnames:
            table[name].append(row[name])
    return table


def floats(table: dict[str, list], column: str) -> list[float]:
    try:
        return [float(v) for v in table[column]]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"column {column!r} holds non-numeric data: {exc}") from exc
