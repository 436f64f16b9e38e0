"""Strict loading of the solver's documented CSV schemas.

Every loader validates the header before touching the data and reports
missing columns by name, so a truncated or foreign file fails loudly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """CSV does not conform to its documented schema."""


def load_table(path, required, optional=()):
    """Read a CSV into {column: list[str]} validating the required columns.

    Raises :class:`SchemaError` naming the first missing column.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected columns {list(required)}")
        for column in required:
            if column not in header:
                raise SchemaError(
                    f"{path}: missing required column '{column}' (found {header})"
                )
        idx = {c: header.index(c) for c in (*required, *optional) if c in header}
        data = {c: [] for c in idx}
        for row in reader:
            for c, i in idx.items():
                data[c].append(row[i])
    return data


def numeric(table, column):
    try:
        return np.asarray([float(v) for v in table[column]])
    except ValueError as exc:
        raise SchemaError(f"non-numeric value in column '{column}': {exc}") from None


def load_snapshots(path):
    table = load_table(path, ("t", "x", "rho", "E"))
    return {k: numeric(table, k) for k in ("t", "x", "rho", "E")}


def load_convergence(path):
    table = load_table(path, ("eps", "k", "err"), optional=("parareal", "adaptation"))
    out = {k: numeric(table, k) for k in ("eps", "k", "err")}
    for key in ("parareal", "adaptation"):
        if key in table:
            out[key] = np.asarray(table[key])
    return out


def load_mass(path):
    table = load_table(path, ("eps", "n", "t", "dm"), optional=("parareal", "adaptation"))
    out = {k: numeric(table, k) for k in ("eps", "n", "t", "dm")}
    for key in ("parareal", "adaptation"):
        if key in table:
            out[key] = np.asarray(table[key])
    return out


def load_speedups(path):
    table = load_table(path, ("eps", "parareal", "adaptation", "seconds", "speedup"))
    return {
        "eps": table["eps"],
        "parareal": table["parareal"],
        "adaptation": table["adaptation"],
        "seconds": numeric(table, "seconds"),
        "speedup": numeric(table, "speedup"),
    }


def load_cells(path):
    table = load_table(path, ("eps", "parareal", "adaptation", "mode", "path"),
                       optional=("status",))
    return table


def load_boundaries(path):
    table = load_table(path, ("eps", "n", "t", "x", "rho", "E"))
    return {k: numeric(table, k) for k in ("n", "t", "x", "rho", "E")}
