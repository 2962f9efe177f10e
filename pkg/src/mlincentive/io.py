"""CSV and manifest helpers with a fixed float format."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .numerics import GridFunction

FLOAT_FORMAT = "%.9g"


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FORMAT % float(x)


def write_csv(path, columns: dict) -> int:
    """Write equal-length columns; returns the number of data rows."""
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[k])) for k in names]
    n = {a.shape[0] for a in arrays}
    if len(n) != 1:
        raise ValueError(f"columns of unequal length in {path}")
    rows = n.pop()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(rows):
            w.writerow([format_value(a[i]) for a in arrays])
    return rows


def read_csv(path) -> dict:
    """Columns of a numeric CSV as float arrays, in header order."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [row for row in r]
    out = {}
    for j, name in enumerate(header):
        out[name] = np.array([float(row[j]) for row in data])
    return out


def write_manifest(path, entries: dict) -> None:
    """Plain ``key = value`` lines in sorted key order."""
    lines = [f"{k} = {entries[k]}" for k in sorted(entries)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


def write_grid_function(path, gf) -> int:
    """Two-column ``s,value`` CSV of a grid function."""
    return write_csv(path, {"s": gf.s, "value": gf.values})


def read_grid_function(path, singular=False):
    cols = read_csv(path)
    return GridFunction(cols["value"], singular=singular)
