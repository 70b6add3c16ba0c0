"""CSV tables and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError


def format_number(x) -> str:
    """17 significant digits: round-trips every binary64 value."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@dataclass
class CsvTable:
    header: list
    rows: list = field(default_factory=list)
    path: Path | None = None

    def __post_init__(self):
        self.header = [str(h) for h in self.header]
        if not self.header:
            raise InvalidArgumentError("a table needs at least one column")
        for row in self.rows:
            self._check(row)

    def _check(self, row):
        if len(row) != len(self.header):
            raise InvalidArgumentError(f"row of length {len(row)} in a table with {len(self.header)} columns")

    def append(self, row):
        row = list(row)
        self._check(row)
        self.rows.append(row)

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]


def write_csv(table: CsvTable, path=None) -> Path:
    path = Path(path if path is not None else table.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([format_number(v) for v in row])
    table.path = path
    return path


def _parse_cell(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path) -> CsvTable:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidArgumentError(f"{path}: empty CSV file")
    return CsvTable(rows[0], [[_parse_cell(c) for c in r] for r in rows[1:]], path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def write_json(obj, path) -> Path:
    """Write with sorted keys so deterministic runs are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)
