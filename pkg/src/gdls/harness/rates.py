"""Convergence-rate classification of a trace's objective values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_ROWS = 20
R2_LINEAR = 0.98


@dataclass(frozen=True)
class RateFit:
    kind: str
    slope: float
    r2: float
    tail_fraction: float
    rss_geometric: float
    rss_sublinear: float
    sublinear_model: str
    rows: int


def _lstsq(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept and residual sum of squares of y ~ a + b x."""
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[1]), float(coef[0]), float(res @ res)


def _series(trace) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(trace, "rows"):
        t = np.array([r.iter for r in trace.rows], dtype=np.float64)
        f = np.array([r.f for r in trace.rows], dtype=np.float64)
    else:
        f = np.asarray(trace, dtype=np.float64)
        t = np.arange(f.size, dtype=np.float64)
    keep = np.isfinite(f) & (f > 0)
    return t[keep], f[keep]


def fit_rate(trace, tail_fraction: float = 0.5) -> RateFit:
    """Classify the tail of log f(t) as linear, sublinear or flat.

    Accepts a Trace or a plain sequence of objective values. The geometric
    model log f = a + b t competes with two sublinear models, 1/f = a + b t and
    log f = a + p log(t + 1); residuals are compared in log space with equal
    parameter counts, so the AIC comparison reduces to residual sums.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    t, f = _series(trace)
    if t.size < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows with finite f > 0, got {t.size}")
    k = max(3, int(math.ceil(tail_fraction * t.size)))
    t, f = t[-k:], f[-k:]
    lf = np.log(f)

    slope, _, rss_geo = _lstsq(t, lf)
    tss = float(((lf - lf.mean()) ** 2).sum())
    r2 = 1.0 - rss_geo / tss if tss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)

    candidates = {}
    # 1/f can overflow on fast geometric tails; the harmonic model then drops out.
    with np.errstate(over="ignore", invalid="ignore"):
        b, a, _ = _lstsq(t, 1.0 / f)
        pred = a + b * t
    if math.isfinite(b) and b > 0 and np.all(np.isfinite(pred)) and np.all(pred > 0):
        candidates["harmonic"] = float(((lf + np.log(pred)) ** 2).sum())
    p, a, rss_pow = _lstsq(np.log(t + 1.0), lf)
    if p < 0:
        candidates["power"] = rss_pow
    if candidates:
        model = min(candidates, key=candidates.get)
        rss_sub = candidates[model]
    else:
        model, rss_sub = "none", math.inf

    # Noise floor so exact inputs compare cleanly.
    floor = 1e-20 * k
    if not slope < 0.0 or tss <= floor:
        kind = "flat"
    elif rss_sub + floor < rss_geo:
        kind = "sublinear"
    elif r2 >= R2_LINEAR:
        kind = "linear"
    else:
        kind = "flat"
    return RateFit(kind, slope, r2, tail_fraction, rss_geo, rss_sub, model, int(t.size))
