"""Backtracking Armijo line-search, its stochastic form, and the Polyak step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EvaluationRangeError, LineSearchError, StepSizeError


@dataclass(frozen=True)
class LineSearchConfig:
    eta_max: float = 1e8
    c: float = 0.5
    beta: float = 0.9
    max_backtracks: int = 200
    exact_refine: bool = False
    refine_rel_tol: float = 1e-3
    warm_start: bool = False
    # Treat an overflowing trial point as a failed Armijo test instead of raising.
    reject_overflow: bool = True

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.eta_max > 0.0:
            raise ValueError(f"eta_max must be positive, got {self.eta_max}")
        if not 0.0 < self.refine_rel_tol <= 0.5:
            raise ValueError(f"refine_rel_tol must lie in (0, 0.5], got {self.refine_rel_tol}")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be nonnegative")


@dataclass(frozen=True)
class LineSearchOutcome:
    step: float
    trials: int
    f_next: float
    fevals: int

    @property
    def backtracks(self) -> int:
        return self.trials - 1


def armijo_floor(f: float, c: float, beta: float, eta_max: float, lam0: float, lam1: float) -> float:
    """Guaranteed accepted step min{eta_max, beta / (lam0 + lam1 f)}."""
    denom = lam0 + lam1 * f
    if denom <= 0.0:
        return eta_max
    return min(eta_max, beta / denom)


def armijo_backtrack(
    f_at: Callable[[np.ndarray], float],
    f0: float,
    grad_sq: float,
    point_at: Callable[[float], np.ndarray],
    cfg: LineSearchConfig,
    eta_start: float | None = None,
) -> LineSearchOutcome:
    """Largest step on the grid eta_start * beta^k passing the Armijo test.

    `point_at(eta)` builds the trial iterate and `f_at` evaluates it. With
    `exact_refine` the accepted step is pushed toward the last failing trial by
    bisection.
    """
    if not grad_sq > 0.0:
        raise ValueError(f"grad_sq must be positive, got {grad_sq}")
    if not np.isfinite(f0):
        raise ValueError(f"f0 must be finite, got {f0}")
    c = cfg.c
    fevals = 0

    def trial(eta: float) -> tuple[bool, float]:
        nonlocal fevals
        fevals += 1
        try:
            val = f_at(point_at(eta))
        except EvaluationRangeError:
            if not cfg.reject_overflow:
                raise
            return False, np.inf
        return bool(val <= f0 - c * eta * grad_sq), val

    eta = cfg.eta_max if eta_start is None else min(eta_start, cfg.eta_max)
    failed = None
    trials = 0
    while True:
        trials += 1
        ok, val = trial(eta)
        if ok:
            break
        if trials > cfg.max_backtracks:
            raise LineSearchError(
                f"no Armijo step after {cfg.max_backtracks} backtracks (last trial {eta:.6g})",
                last_step=eta,
            )
        failed = eta
        eta *= cfg.beta

    if cfg.exact_refine and failed is not None:
        lo, hi, f_lo = eta, failed, val
        while (hi - lo) > cfg.refine_rel_tol * hi:
            mid = 0.5 * (lo + hi)
            ok, v = trial(mid)
            if ok:
                lo, f_lo = mid, v
            else:
                hi = mid
        eta, val = lo, f_lo
    return LineSearchOutcome(step=eta, trials=trials, f_next=float(val), fevals=fevals)


def stochastic_armijo(
    components: Callable[[int], object],
    theta: np.ndarray,
    index: int,
    cfg: LineSearchConfig,
    eta_start: float | None = None,
    evaluation=None,
) -> tuple[LineSearchOutcome, object]:
    """Armijo backtracking on the single sampled summand f_index.

    `components(i)` returns the i-th summand objective. Returns the outcome and
    the summand evaluation at theta (value and gradient used for the test).
    """
    f_i = components(index)
    ev = evaluation if evaluation is not None else f_i.evaluate(theta)
    g = ev.gradient
    grad_sq = float(g @ g)
    out = armijo_backtrack(f_i.value, ev.value, grad_sq, lambda eta: theta - eta * g, cfg, eta_start)
    return out, ev


def polyak_step(f_val: float, f_comp: float, grad_sq: float, c: float) -> float:
    """(f(theta) - f(u)) / (c ||grad||^2); pass f_comp = eps for the knowledge-free rule."""
    if not c > 0.0:
        raise StepSizeError(f"c must be positive, got {c}")
    if not grad_sq > 0.0:
        raise StepSizeError("zero gradient: optimum reached")
    if f_val < f_comp:
        raise StepSizeError(f"f = {f_val:.6g} is below the comparator value {f_comp:.6g}")
    return (f_val - f_comp) / (c * grad_sq)
