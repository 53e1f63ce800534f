"""Synthetic instance generators and LIBSVM text I/O."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .objectives import Dataset, MabInstance, MdpInstance

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SeparableSpec:
    n: int
    d: int
    margin: float
    seed: int
    u_star: np.ndarray
    realized_margin: float


def _unit_ball(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    z = rng.standard_normal((m, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * rng.random(m)[:, None] ** (1.0 / d)


def gen_separable_logistic(n: int, d: int, gamma: float, seed: int) -> tuple[Dataset, SeparableSpec]:
    """Points in the unit ball with |<x, u*>| >= gamma, labelled by sign(<x, u*>)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    kept, drawn, budget = [], 0, 1000 * n
    have = 0
    while have < n:
        if drawn >= budget:
            raise RuntimeError(f"rejection budget of {budget} draws exhausted; gamma={gamma} is too large for d={d}")
        batch = min(max(2 * (n - have), 64), budget - drawn)
        cand = _unit_ball(rng, batch, d)
        drawn += batch
        ok = cand[np.abs(cand @ u) >= gamma]
        kept.append(ok)
        have += ok.shape[0]
    X = np.concatenate(kept)[:n]
    proj = X @ u
    y = np.where(proj > 0, 1.0, -1.0)
    realized = float(np.min(y * proj))
    data = Dataset(X, y, meta={"separable": True, "margin": realized})
    return data, SeparableSpec(n, d, gamma, seed, u, realized)


def gen_glm_realizable(n: int, d: int, theta_star_norm: float, seed: int) -> tuple[Dataset, np.ndarray]:
    """Unit-ball features with labels sigma(<x, theta*>)."""
    if not theta_star_norm > 0.0:
        raise ValueError("theta_star_norm must be positive")
    rng = np.random.default_rng(seed)
    X = _unit_ball(rng, n, d)
    theta = rng.standard_normal(d)
    theta *= theta_star_norm / np.linalg.norm(theta)
    y = expit(X @ theta)
    return Dataset(X, y), theta


def gen_bandit(K: int, seed: int, gap: float | None = None) -> MabInstance:
    """Uniform rewards in [0, 1], optionally separating the best arm by `gap`."""
    if K < 2:
        raise ValueError("K must be at least 2")
    rng = np.random.default_rng(seed)
    r = rng.random(K)
    if gap is not None:
        if not 0.0 < gap <= 1.0:
            raise ValueError("gap must lie in (0, 1]")
        best = int(np.argmax(r))
        others = np.delete(np.arange(K), best)
        r[others] *= 1.0 - gap
        second = float(r[others].max())
        r[best] = second + gap + (1.0 - second - gap) * r[best]
    return MabInstance(r)


def gen_mdp(S: int, A: int, gamma: float, seed: int) -> MdpInstance:
    """Random tabular MDP with normalized uniform transitions and uniform rho."""
    if S < 1 or A < 1:
        raise ValueError("S and A must be positive")
    rng = np.random.default_rng(seed)
    P = rng.random((S, A, S)) + 1e-3
    P /= P.sum(axis=2, keepdims=True)
    r = rng.random((S, A))
    return MdpInstance(P, r, np.full(S, 1.0 / S), gamma)


def _parse_label(tok: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ValueError(f"line {lineno}: unparseable label {tok!r}") from None
    if val in (0.0, -1.0):
        return -1.0
    if val == 1.0:
        return 1.0
    raise ValueError(f"line {lineno}: label {tok!r} is not one of 0, -1, +1")


def parse_libsvm(path, normalize_rows: bool = True, n_features: int | None = None) -> Dataset:
    """Read `<label> <index>:<value> ...` lines into a dense binary Dataset."""
    labels, rows = [], []
    zero_labels = 0
    d = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            label = _parse_label(toks[0], lineno)
            if float(toks[0]) == 0.0:
                zero_labels += 1
            entries, last = [], 0
            for tok in toks[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ValueError(f"line {lineno}: malformed entry {tok!r}")
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: bad index {idx_s!r}") from None
                try:
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: unparseable number {val_s!r}") from None
                if idx < 1:
                    raise ValueError(f"line {lineno}: indices are 1-based, got {idx}")
                if idx <= last:
                    raise ValueError(f"line {lineno}: indices must be strictly ascending ({idx} after {last})")
                last = idx
                entries.append((idx, val))
            d = max(d, last)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise ValueError(f"{path}: no samples")
    if n_features is not None:
        if n_features < d:
            raise ValueError(f"file uses index {d} but n_features={n_features}")
        d = n_features
    d = max(d, 1)
    X = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    meta = {"source": str(path)}
    if zero_labels:
        log.info("mapped %d zero labels to -1 in %s", zero_labels, path)
        meta["zero_labels_mapped"] = zero_labels
    if normalize_rows:
        norms = np.linalg.norm(X, axis=1)
        big = norms > 1.0
        X[big] /= norms[big, None]
        meta["rows_normalized"] = int(big.sum())
    return Dataset(X, np.array(labels), meta=meta)


def write_libsvm(data: Dataset, path) -> None:
    """Write nonzero entries with shortest round-trip float text.

    An explicit zero for the last column keeps the feature count stable.
    """
    X = data.features
    d = X.shape[1]
    pad_last = not np.any(X[:, -1])
    lines = []
    for i in range(X.shape[0]):
        lab = data.labels[i]
        parts = ["+1" if lab > 0 else "-1"]
        parts += [f"{j + 1}:{repr(float(X[i, j]))}" for j in np.flatnonzero(X[i])]
        if i == 0 and pad_last:
            parts.append(f"{d}:0")
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
