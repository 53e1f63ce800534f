"""Side-by-side comparison of traces on one problem, as a markdown report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..optimizers import Trace
from .rates import RateFit, fit_rate


@dataclass(frozen=True)
class BoundCheck:
    label: str
    eps: float | None
    observed: int | None
    bound: float

    @property
    def holds(self) -> bool:
        return self.observed is not None and self.observed <= self.bound


@dataclass
class Report:
    text: str
    fits: dict = field(default_factory=dict)
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)


def checkpoints(last: int) -> list[int]:
    """0, 1, 2, 5, 10, 20, 50, ... up to `last`, plus `last` itself."""
    pts, k = [0], 0
    while True:
        for m in (1, 2, 5):
            v = m * 10**k
            if v > last:
                if pts[-1] != last:
                    pts.append(last)
                return pts
            pts.append(v)
        k += 1


def f_at(trace: Trace, t: int) -> float | None:
    """Objective at the last evaluated row with iter <= t; None past the end."""
    if not trace.rows or t > trace.rows[-1].iter:
        return None
    best = None
    for r in trace.rows:
        if r.iter > t:
            break
        if math.isfinite(r.f):
            best = r.f
    return best


def first_below(trace: Trace, eps: float) -> int | None:
    for r in trace.rows:
        if math.isfinite(r.f) and r.f <= eps:
            return r.iter
    return None


def observed_iterations(trace: Trace, eps: float | None) -> int | None:
    """First iteration with f <= eps, or the run length if it stopped on its own criterion."""
    if eps is not None:
        return first_below(trace, eps)
    if trace.terminal_reason in ("f_target", "grad_tol"):
        return trace.iterations
    return None


def _cell(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.4g}"
    return str(x)


def compare_report(traces: list[Trace], labels: list[str] | None = None, bounds: dict | None = None,
                   path=None, tail_fraction: float = 0.5) -> Report:
    """Tabulate f at shared checkpoints, rate fits, step sizes and bound checks.

    `bounds` maps a label to a bound or to (bound, eps); with eps the observed
    count is the first iteration reaching f <= eps.
    """
    if len(traces) < 2:
        raise ValueError("a comparison needs at least two traces")
    if labels is None:
        labels = [t.meta.get("name", f"trace{i}") for i, t in enumerate(traces)]
    if len(labels) != len(traces):
        raise ValueError("one label per trace")
    if len(set(labels)) != len(labels):
        raise ValueError(f"labels must be unique, got {labels}")
    keys = {t.meta["problem_key"] for t in traces if t.meta.get("problem_key")}
    if len(keys) > 1:
        raise ValueError(f"traces come from different problems: {sorted(keys)}")

    lines = ["# Trace comparison", ""]
    if keys:
        lines += [f"problem: `{keys.pop()}`", ""]

    last = max(t.iterations for t in traces)
    lines += ["## Objective at checkpoints", "", "| iter | " + " | ".join(labels) + " |",
              "|---" * (len(labels) + 1) + "|"]
    for cp in checkpoints(last):
        lines.append(f"| {cp} | " + " | ".join(_cell(f_at(t, cp)) for t in traces) + " |")

    fits: dict[str, RateFit | str] = {}
    lines += ["", "## Rate fits", "", "| trace | kind | slope | r2 |", "|---|---|---|---|"]
    for lab, t in zip(labels, traces):
        try:
            fit = fit_rate(t, tail_fraction)
            fits[lab] = fit
            lines.append(f"| {lab} | {fit.kind} | {fit.slope:.4g} | {fit.r2:.4f} |")
        except ValueError as exc:
            fits[lab] = str(exc)
            lines.append(f"| {lab} | n/a ({exc}) | - | - |")

    lines += ["", "## Step sizes", "", "| trace | first | min | median | max | max/first |", "|---|---|---|---|---|---|"]
    for lab, t in zip(labels, traces):
        s = t.steps
        s = s[s > 0]
        if s.size:
            lines.append(f"| {lab} | {s[0]:.4g} | {s.min():.4g} | {np.median(s):.4g} | {s.max():.4g} | {s.max() / s[0]:.4g} |")
        else:
            lines.append(f"| {lab} | - | - | - | - | - |")

    checks = []
    if bounds:
        by_label = dict(zip(labels, traces))
        lines += ["", "## Iteration bounds", "", "| trace | eps | observed | bound | holds |", "|---|---|---|---|---|"]
        for lab, spec in bounds.items():
            if lab not in by_label:
                raise ValueError(f"bound given for unknown trace {lab!r}")
            value, eps = spec if isinstance(spec, tuple) else (spec, None)
            chk = BoundCheck(lab, eps, observed_iterations(by_label[lab], eps), float(value))
            checks.append(chk)
            lines.append(f"| {lab} | {_cell(eps)} | {_cell(chk.observed)} | {chk.bound:.6g} | {'yes' if chk.holds else 'NO'} |")

    text = "\n".join(lines) + "\n"
    if path is not None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return Report(text, fits, checks)
