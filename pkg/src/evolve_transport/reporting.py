"""Deterministic record serialization and plain-text tables.

Report files must be byte-identical across runs with the same inputs,
so floats are written with a fixed 17-significant-digit format, keys
keep insertion order, and nothing time- or host-dependent is emitted.
Non-finite floats become null (JSON) or an empty cell (CSV).
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

FLOAT_FORMAT = ".17g"


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), FLOAT_FORMAT)


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def dumps_json(obj, _indent: int = 0) -> str:
    """Serialize records with fixed float formatting and key order."""
    pad = "  " * _indent
    inner = "  " * (_indent + 1)
    obj = _jsonable(obj)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return "null"
        return format_float(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + dumps_json(v, _indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            inner + dumps_json(str(k)) + ": " + dumps_json(v, _indent + 1)
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(value) -> str:
    value = _jsonable(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return ""
        return format_float(value)
    return str(value)


def dumps_csv(records: list[dict]) -> str:
    if not records:
        return ""
    header = list(records[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([_csv_cell(rec.get(k)) for k in header])
    return buf.getvalue()


def write_records(path, records: list[dict], fmt: str) -> None:
    """Write records to path as json or csv, trailing newline included."""
    path = Path(path)
    if fmt == "json":
        text = dumps_json(records) + "\n"
    elif fmt == "csv":
        text = dumps_csv(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _table_cell(value) -> str:
    value = _jsonable(value)
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "pass" if value else "FAIL"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def render_table(records: list[dict], columns: list[str] | None = None) -> str:
    """Aligned plain-text table for terminal output."""
    if not records:
        return "(no records)"
    if columns is None:
        columns = list(records[0].keys())
    rows = [[_table_cell(rec.get(c)) for c in columns] for rec in records]
    widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
