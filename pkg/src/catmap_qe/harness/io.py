"""CSV and JSON writers with canonical, byte-stable formatting."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

SCHEMA_VERSION = 1

CSV_HEADERS = {
    "spectrum": ("N", "j", "phase", "residual"),
    "variance": ("N", "symbol", "j", "elem_re", "elem_im", "mean", "variance"),
    "mass": ("N", "j", "ball", "sharp", "smooth", "ratio"),
    "zeros": ("N", "j", "k", "x", "y", "multiplicity"),
    "egorov": ("N", "T", "symbol", "value", "hs_sq"),
    "kernel": ("N", "quantity", "value"),
    "correlations": ("T", "exact_re", "exact_im", "quadrature_re", "quadrature_im"),
    "cover": ("N", "epsilon", "ball", "center_x", "center_y"),
    "acceptance": ("criterion", "name", "passed", "runtime_limit_s"),
}


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def emit_csv(path, kind: str, rows) -> int:
    """Write rows (already in canonical order) under the fixed header for ``kind``."""
    header = CSV_HEADERS[kind]
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{kind} row has {len(row)} fields, expected {len(header)}")
            w.writerow([_cell(v) for v in row])
            n += 1
    return n


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def emit_summary(path, summary: dict):
    body = dict(summary)
    body["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(body))
