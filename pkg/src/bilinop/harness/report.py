"""Report serialization: canonical JSON and long-format CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import sys

import numpy as np

TIMING_KEY = "timing"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def without_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != TIMING_KEY}


def to_json(report: dict, include_timing: bool = True) -> str:
    """Canonical JSON: sorted keys, fixed indentation, non-finite floats as strings."""
    body = report if include_timing else without_timing(report)
    return json.dumps(_plain(body), sort_keys=True, indent=2) + "\n"


def to_csv(report: dict) -> str:
    """One row per entry of ``report["rows"]``, prefixed with the experiment name.

    Bench timing rows are merged into the matching ``N`` row.
    """
    rows = [dict(r) for r in report.get("rows", [])]
    timing = report.get(TIMING_KEY, {})
    if isinstance(timing, dict) and isinstance(timing.get("rows"), list):
        by_n = {t["N"]: t for t in timing["rows"]}
        for r in rows:
            r.update({k: v for k, v in by_n.get(r.get("N"), {}).items() if k != "N"})
    columns = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["experiment", *columns], lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({"experiment": report.get("experiment", ""), **_plain(r)})
    return buf.getvalue()


def render(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report: dict, path=None, fmt: str = "json") -> None:
    text = render(report, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
