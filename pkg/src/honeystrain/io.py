"""CSV/JSON emission with stable number formatting and schema checks."""
from __future__ import annotations

import io as _io
import json
from typing import Iterable, Sequence

import jsonschema
import numpy as np


def fmt(x) -> str:
    """17 significant digits: round-trips every binary64 exactly."""
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def bands_csv(q_grid, curves) -> str:
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    header = ["q"] + [f"E{i + 1}" for i in range(curves.shape[1])]
    return csv_text(header, (np.concatenate([[q], row]) for q, row in zip(q_grid, curves)))


def parse_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty CSV")
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    if any(len(r) != len(header) for r in rows):
        raise ValueError("CSV is not rectangular")
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def parse_bands_csv(text: str):
    """Return (q, curves) after checking the q,E1..EK schema."""
    header, data = parse_csv(text)
    want = ["q"] + [f"E{i + 1}" for i in range(len(header) - 1)]
    if header != want:
        raise ValueError(f"unexpected band header {header[:3]}...")
    curves = data[:, 1:]
    if np.any(np.diff(curves, axis=1) < 0):
        raise ValueError("band rows must be ascending")
    return data[:, 0], curves


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def json_text(obj, schema=None) -> str:
    data = _plain(obj)
    if schema is not None:
        jsonschema.validate(data, schema)
    return json.dumps(data, indent=2) + "\n"


_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_NUMS = {"type": "array", "items": _NUM}

MODE_SCHEMA = {
    "type": "object",
    "required": ["q", "eigenvalue", "label", "boundary_weight", "profile"],
    "properties": {
        "q": _NUM,
        "eigenvalue": _NUM,
        "label": {"enum": ["Bulk", "LeftBoundary", "RightBoundary"]},
        "boundary_weight": {"type": "number", "minimum": 0, "maximum": 1 + 1e-9},
        "profile": _NUMS,
    },
}

MODES_SCHEMA = {
    "type": "object",
    "required": ["q", "tol", "layer_cells", "counts", "modes"],
    "properties": {
        "q": _NUM,
        "tol": _NUM,
        "layer_cells": {"type": "integer"},
        "counts": {
            "type": "object",
            "required": ["left", "right", "bulk"],
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("left", "right", "bulk")},
        },
        "modes": {"type": "array", "items": MODE_SCHEMA},
    },
}

DIRAC_SCHEMA = {
    "type": "object",
    "required": ["profile", "k_parallel", "t1", "half_width", "n_cells", "gap_edge", "eigenvalues"],
    "properties": {
        "profile": {"type": "string"},
        "k_parallel": _NUM,
        "t1": _NUM,
        "half_width": _NUM,
        "n_cells": {"type": "integer"},
        "gap_edge": _NUM_OR_NULL,
        "eigenvalues": _NUMS,
    },
}

_ORDER = {"type": ["number", "null"]}
VALIDATION_SCHEMA = {
    "type": "object",
    "required": ["deltas", "residuals", "fitted_orders", "E1", "E2", "eigenvalue_errors"],
    "properties": {
        "deltas": _NUMS,
        "residuals": {"type": "object", "additionalProperties": _NUMS},
        "fitted_orders": {"type": "object", "additionalProperties": _ORDER},
        "E1": {"type": "object", "additionalProperties": _NUM},
        "E2": {"type": "object", "additionalProperties": {"type": "array", "items": _NUM,
                                                          "minItems": 2, "maxItems": 2}},
        "eigenvalue_errors": _NUMS,
    },
}
