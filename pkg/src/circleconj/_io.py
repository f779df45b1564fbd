"""Artifact writers: CSV with a timestamp line, sorted JSON, plain-text summaries."""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """``# generated <timestamp>`` then the header row and the body.

    Floats are written with ``repr`` so identical inputs give identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# generated {timestamp()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def csv_body(path) -> bytes:
    """File contents without the timestamp line."""
    data = Path(path).read_bytes()
    return data.split(b"\n", 1)[1] if data.startswith(b"# generated") else data


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_summary(path, title: str, lines, checks: dict) -> Path:
    """One-page verdict text: free-form lines, then one PASS/FAIL line per check."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [title, "=" * len(title), f"generated {timestamp()}", ""]
    out.extend(lines)
    if checks:
        out.append("")
        for name, ok in checks.items():
            out.append(f"{'PASS' if ok else 'FAIL'}  {name}")
    path.write_text("\n".join(out) + "\n")
    return path
