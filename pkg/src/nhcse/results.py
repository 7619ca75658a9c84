"""Deterministic CSV/JSON writers and their readers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _plain(obj):
    """Recursively convert numpy types and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _parse(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path) -> tuple[list[str], list[tuple]]:
    """Header and typed rows (ints, floats, bools, None for empty, else str)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [tuple(_parse(c) for c in row) for row in r]
    return header, rows


def flatten(summary: dict, prefix: str = "") -> dict:
    """Scalar leaves of a nested summary keyed by dotted paths (lists dropped)."""
    out = {}
    for k, v in summary.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            continue
        else:
            out[key] = _plain(v)
    return out
