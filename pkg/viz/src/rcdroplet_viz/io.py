"""Parsers for the primary component's file formats."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import SNAPSHOT_HEADER


class SchemaError(ValueError):
    pass


def read_snapshot(path):
    """(L, open flags list) from an `rcmsnap v1` snapshot file."""
    lines = Path(path).read_text().strip("\n").split("\n")
    if len(lines) != 2 or not lines[0].startswith(f"{SNAPSHOT_HEADER} L="):
        raise SchemaError(f"expected '{SNAPSHOT_HEADER} L=<L>' header in {path}")
    L = int(lines[0].split("L=")[1])
    n_edges = 2 * (2 * L + 1) * (2 * L)
    flags = []
    for ch in lines[1]:
        nib = int(ch, 16)
        for j in range(4):
            if len(flags) < n_edges:
                flags.append(bool(nib & (1 << (3 - j))))
    if len(flags) != n_edges:
        raise SchemaError("snapshot bitmap does not match the window edge count")
    return L, flags


def snapshot_edges(L, flags):
    """Open edges as ((x0, y0), (x1, y1)) segments, canonical order."""
    out = []
    i = 0
    for y in range(-L, L + 1):
        for x in range(-L, L + 1):
            if x < L:
                if flags[i]:
                    out.append(((x, y), (x + 1, y)))
                i += 1
            if y < L:
                if flags[i]:
                    out.append(((x, y), (x, y + 1)))
                i += 1
    return out


def read_circuit(path):
    """Counterclockwise vertex list from circuit JSON; may be empty."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise SchemaError("circuit file must be a JSON array of [x, y] pairs")
    return [(int(x), int(y)) for x, y in data]


def read_profile(path):
    data = json.loads(Path(path).read_text())
    if "polygon" not in data or "lambda" not in data:
        raise SchemaError("profile file must carry 'polygon' and 'lambda'")
    return data


def read_regeneration(path):
    data = json.loads(Path(path).read_text())
    if "sites" not in data or "theta_max" not in data:
        raise SchemaError("regeneration file must carry 'sites' and 'theta_max'")
    return data


def read_csv_rows(path):
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))
