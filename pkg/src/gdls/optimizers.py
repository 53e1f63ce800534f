"""Optimization loops that record per-iteration traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import LineSearchError, StepSizeError
from .linesearch import LineSearchConfig, armijo_backtrack, polyak_step, stochastic_armijo
from .objectives import FiniteSum, Objective, as_param

TERMINAL_REASONS = ("grad_tol", "f_target", "max_iters", "error")


@dataclass(frozen=True)
class RunConfig:
    max_iters: int = 1000
    grad_tol: float = 1e-12
    f_target: float | None = None
    seed: int = 0
    record_extras: bool = False
    record_iterates: bool = False
    eval_every: int = 10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.grad_tol >= 0.0:
            raise ValueError("grad_tol must be nonnegative")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")


class TraceRow(NamedTuple):
    iter: int
    f: float
    grad_norm: float
    step: float
    backtracks: int
    fevals_cum: int
    extra: float | None = None


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    terminal_reason: str = "max_iters"
    error: str | None = None
    iterates: list[np.ndarray] | None = None
    final_theta: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    @property
    def f(self) -> np.ndarray:
        return self.column("f")

    @property
    def steps(self) -> np.ndarray:
        s = self.column("step")
        return s[np.isfinite(s)]

    @property
    def final_f(self) -> float:
        vals = self.f
        vals = vals[np.isfinite(vals)]
        return float(vals[-1]) if vals.size else math.nan

    @property
    def best_f(self) -> float:
        vals = self.f
        vals = vals[np.isfinite(vals)]
        return float(vals.min()) if vals.size else math.nan

    @property
    def iterations(self) -> int:
        """Number of updates performed."""
        return self.rows[-1].iter if self.rows else 0


class _Recorder:
    def __init__(self, obj: Objective, run_cfg: RunConfig, theta0: np.ndarray):
        self.obj = obj
        self.cfg = run_cfg
        self.trace = Trace(iterates=[theta0.copy()] if run_cfg.record_iterates else None)
        self.fevals = 0

    def extra(self, theta):
        return self.obj.monitor(theta) if self.cfg.record_extras else None

    def row(self, t, f, gnorm, step, backtracks, extra):
        self.trace.rows.append(TraceRow(t, float(f), float(gnorm), float(step), int(backtracks), self.fevals, extra))

    def iterate(self, theta):
        if self.trace.iterates is not None:
            self.trace.iterates.append(theta.copy())

    def stop_reason(self, f, gnorm):
        if not (math.isfinite(f) and math.isfinite(gnorm)):
            return "error"
        if gnorm <= self.cfg.grad_tol or gnorm == 0.0:
            return "grad_tol"
        if self.cfg.f_target is not None and f <= self.cfg.f_target:
            return "f_target"
        return None

    def finish(self, t, theta, f, gnorm, reason, error=None):
        self.row(t, f, gnorm, math.nan, 0, self.extra(theta) if math.isfinite(f) else None)
        self.trace.terminal_reason = reason
        if reason == "error" and error is None:
            error = f"non-finite objective or gradient at iteration {t}"
        self.trace.error = error
        self.trace.final_theta = theta
        return self.trace


def _evaluate(obj, theta):
    ev = obj.evaluate(theta)
    g = ev.gradient
    if not np.all(np.isfinite(g)):
        return ev.value, g, math.nan
    return ev.value, g, float(np.linalg.norm(g))


def _run_fixed_rule(obj, theta0, run_cfg, step_rule):
    """Shared loop: step_rule(t, theta, f, g, gnorm) -> (step, backtracks, fevals)."""
    theta = as_param(theta0, obj.dim).copy()
    rec = _Recorder(obj, run_cfg, theta)
    f, g, gnorm = _evaluate(obj, theta)
    rec.fevals += 1
    for t in range(run_cfg.max_iters):
        reason = rec.stop_reason(f, gnorm)
        if reason is not None:
            return rec.finish(t, theta, f, gnorm, reason)
        extra = rec.extra(theta)
        try:
            step, backtracks, fevals = step_rule(t, theta, f, g, gnorm)
        except (LineSearchError, StepSizeError) as exc:
            exc.iteration = t
            rec.trace.terminal_reason = "error"
            rec.trace.error = f"iteration {t}: {exc}"
            rec.trace.final_theta = theta
            exc.trace = rec.trace
            raise
        rec.fevals += fevals
        rec.row(t, f, gnorm, step, backtracks, extra)
        theta = theta - step * g
        if not np.all(np.isfinite(theta)):
            return rec.finish(t + 1, theta, math.nan, math.nan, "error",
                              f"non-finite iterate after iteration {t}")
        rec.iterate(theta)
        f, g, gnorm = _evaluate(obj, theta)
        rec.fevals += 1
    reason = rec.stop_reason(f, gnorm)
    return rec.finish(run_cfg.max_iters, theta, f, gnorm, "error" if reason == "error" else "max_iters")


def run_gd_ls(obj: Objective, theta0, ls_cfg: LineSearchConfig, run_cfg: RunConfig) -> Trace:
    """Gradient descent where each step comes from Armijo backtracking."""
    prev = [None]

    def rule(t, theta, f, g, gnorm):
        start = None
        if ls_cfg.warm_start and prev[0] is not None:
            start = prev[0] / ls_cfg.beta
        out = armijo_backtrack(obj.value, f, gnorm * gnorm, lambda eta: theta - eta * g, ls_cfg, start)
        prev[0] = out.step
        return out.step, out.backtracks, out.fevals

    return _run_fixed_rule(obj, theta0, run_cfg, rule)


def default_smoothness(obj: Objective, theta0) -> float:
    """uniform_L when the profile has one, else L0 + L1 f(theta0)."""
    prof = obj.profile()
    if prof.uniform_L is not None and prof.uniform_L > 0.0:
        return prof.uniform_L
    return prof.L0 + prof.L1 * obj.value(theta0)


def run_gd_constant(obj: Objective, theta0, step: float | None, run_cfg: RunConfig) -> Trace:
    """GD with a fixed step, 1/L by default."""
    if step is None:
        L = default_smoothness(obj, as_param(theta0, obj.dim))
        if not L > 0.0:
            raise ValueError("no smoothness constant available for the default 1/L step; pass a step")
        step = 1.0 / L
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    trace = _run_fixed_rule(obj, theta0, run_cfg, lambda *_: (step, 0, 0))
    trace.meta["step"] = step
    return trace


def run_gd_polyak(obj: Objective, theta0, c: float, comparator: float, run_cfg: RunConfig) -> Trace:
    """GD with the step (f(theta) - comparator) / (c ||grad||^2).

    `comparator` is either a known f(u) or the target level eps. Reaching the
    comparator value counts as hitting the target.
    """
    if not c > 0.5:
        raise ValueError(f"the Polyak run needs c > 1/2, got {c}")
    f_target = run_cfg.f_target
    if f_target is None or f_target < comparator:
        f_target = comparator
    cfg = RunConfig(**{**run_cfg.__dict__, "f_target": f_target})

    def rule(t, theta, f, g, gnorm):
        return polyak_step(f, comparator, gnorm * gnorm, c), 0, 0

    return _run_fixed_rule(obj, theta0, cfg, rule)


def run_normalized_gd(obj: Objective, theta0, step: float, run_cfg: RunConfig) -> Trace:
    """theta <- theta - step * grad / ||grad||."""
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    theta0 = as_param(theta0, obj.dim)
    ev = obj.evaluate(theta0)
    if not np.any(ev.gradient):
        raise StepSizeError("normalized GD needs a nonzero gradient at the start")
    return _run_fixed_rule(obj, theta0, run_cfg, lambda t, theta, f, g, gnorm: (step / gnorm, 0, 0))


def run_sgd_sls(obj: FiniteSum, theta0, ls_cfg: LineSearchConfig, run_cfg: RunConfig) -> Trace:
    """Single-sample SGD with a per-sample Armijo line-search.

    Rows are written every iteration: `f` is the full objective on iterations
    divisible by `eval_every` (NaN otherwise), `grad_norm` is the sampled
    gradient norm and `extra` holds the sampled index.
    """
    if not isinstance(obj, FiniteSum):
        raise TypeError("run_sgd_sls needs a finite-sum objective")
    theta = as_param(theta0, obj.dim).copy()
    rng = np.random.default_rng(run_cfg.seed)
    rec = _Recorder(obj, run_cfg, theta)
    n = obj.n_samples
    every = run_cfg.eval_every
    prev = None
    f_full = math.nan
    for t in range(run_cfg.max_iters):
        if t % every == 0:
            f_full = obj.value(theta)
            rec.fevals += 1
            if not math.isfinite(f_full):
                return rec.finish(t, theta, math.nan, math.nan, "error")
            if run_cfg.f_target is not None and f_full <= run_cfg.f_target:
                return _sgd_finish(rec, t, theta, f_full, "f_target")
        else:
            f_full = math.nan
        i = int(rng.integers(n))
        comp = obj.component(i)
        ev = comp.evaluate(theta)
        rec.fevals += 1
        g = ev.gradient
        gnorm = float(np.linalg.norm(g))
        if not (math.isfinite(ev.value) and math.isfinite(gnorm)):
            return rec.finish(t, theta, math.nan, math.nan, "error")
        if gnorm <= run_cfg.grad_tol or gnorm == 0.0:
            # Interpolation: this summand is already minimized, skip the update.
            rec.row(t, f_full, gnorm, 0.0, 0, float(i))
            rec.iterate(theta)
            continue
        start = prev / ls_cfg.beta if (ls_cfg.warm_start and prev is not None) else None
        try:
            out, _ = stochastic_armijo(obj.component, theta, i, ls_cfg, start, evaluation=ev)
        except LineSearchError as exc:
            exc.iteration = t
            rec.trace.terminal_reason = "error"
            rec.trace.error = f"iteration {t}: {exc}"
            exc.trace = rec.trace
            raise
        prev = out.step
        rec.fevals += out.fevals
        rec.row(t, f_full, gnorm, out.step, out.backtracks, float(i))
        theta = theta - out.step * g
        rec.iterate(theta)
    f_full = obj.value(theta)
    rec.fevals += 1
    if run_cfg.f_target is not None and f_full <= run_cfg.f_target:
        return _sgd_finish(rec, run_cfg.max_iters, theta, f_full, "f_target")
    return _sgd_finish(rec, run_cfg.max_iters, theta, f_full, "max_iters")


def _sgd_finish(rec, t, theta, f_full, reason):
    rec.row(t, f_full, math.nan, math.nan, 0, None)
    rec.trace.terminal_reason = reason
    rec.trace.final_theta = theta
    return rec.trace
