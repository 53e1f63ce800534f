"""CSV serialization of optimizer traces."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from ..optimizers import Trace, TraceRow

COLUMNS = ("iter", "f", "grad_norm", "step", "backtracks", "fevals_cum", "extra")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace: Trace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in trace.rows:
            w.writerow([
                r.iter, _fmt(r.f), _fmt(r.grad_norm), _fmt(r.step), r.backtracks, r.fevals_cum,
                "" if r.extra is None else _fmt(r.extra),
            ])


def read_trace_csv(path) -> Trace:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
            rows.append(TraceRow(
                int(rec[0]), float(rec[1]), float(rec[2]), float(rec[3]), int(rec[4]), int(rec[5]),
                float(rec[6]) if rec[6] != "" else None,
            ))
    trace = Trace(rows=rows)
    trace.terminal_reason = "unknown"
    if rows and math.isnan(rows[-1].step):
        trace.terminal_reason = "recorded"
    return trace
