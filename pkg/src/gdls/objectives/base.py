from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DimensionError


def as_param(theta, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float64 array, checking the dimension."""
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D parameter vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter vector has non-finite entries")
    return arr


def descent_constants(q: float) -> tuple[float, float]:
    """(A, B) multipliers of the non-uniform descent inequality at radius q."""
    try:
        eq = math.exp(q)
    except OverflowError:
        return math.inf, math.inf
    b = math.expm1(q) / q
    return 1.0 + eq - b, b


@dataclass(frozen=True)
class SmoothnessProfile:
    L0: float
    L1: float
    nu: float
    omega: float
    uniform_L: float | None = None
    q: float = 2.0

    def __post_init__(self):
        for name in ("L0", "L1", "nu", "omega"):
            val = getattr(self, name)
            if not val >= 0:
                raise ValueError(f"{name} must be nonnegative, got {val}")
        if self.uniform_L is not None and not self.uniform_L >= 0:
            raise ValueError(f"uniform_L must be nonnegative, got {self.uniform_L}")
        if not self.q >= 1:
            raise ValueError(f"q must be at least 1, got {self.q}")

    @property
    def A(self) -> float:
        return descent_constants(self.q)[0]

    @property
    def B(self) -> float:
        return descent_constants(self.q)[1]

    def line_search_constants(self, c: float) -> tuple[float, float]:
        """lambda0, lambda1 of the guaranteed Armijo step 1/(lambda0 + lambda1 f)."""
        if not 0 < c < 1:
            raise ValueError(f"c must lie in (0, 1), got {c}")
        lam0 = 3.0 * (self.L0 + self.L1 * self.omega) / (1.0 - c)
        lam1 = 3.0 * self.L1 * (self.nu + 1.0) / (1.0 - c)
        return lam0, lam1

    def scaled(self, **factors: float) -> "SmoothnessProfile":
        """Copy with some constants multiplied, e.g. scaled(nu=0.5)."""
        vals = {k: getattr(self, k) for k in ("L0", "L1", "nu", "omega", "uniform_L", "q")}
        for k, s in factors.items():
            vals[k] = vals[k] * s
        return SmoothnessProfile(**vals)


def zhang_to_nus(Lc: float, Lg: float) -> SmoothnessProfile:
    """Translate (Lc, Lg) smoothness into (L0, L1, nu, omega)."""
    if Lc < 0 or Lg < 0:
        raise ValueError("Lc and Lg must be nonnegative")
    r = math.sqrt(2.0 * Lc)
    return SmoothnessProfile(L0=Lc + Lg * r, L1=Lg * (8.0 * Lg + r), nu=8.0 * Lg + r, omega=r)


@dataclass(frozen=True)
class Evaluation:
    value: float
    gradient: np.ndarray


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix (row i is x_i) with family-specific labels."""

    features: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)
    max_row_norm2: float = field(init=False)
    max_row_norm1: float = field(init=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError(f"features must be an n x d matrix with n, d >= 1, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite entries")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionError(f"need {X.shape[0]} labels, got shape {y.shape}")
        object.__setattr__(self, "features", _readonly(X))
        y = np.array(y, copy=True)
        y.setflags(write=False)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "max_row_norm2", float(np.max(np.linalg.norm(X, axis=1))))
        object.__setattr__(self, "max_row_norm1", float(np.max(np.abs(X).sum(axis=1))))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def row(self, i: int) -> "Dataset":
        return Dataset(self.features[i : i + 1], self.labels[i : i + 1])


def power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
) -> tuple[float, bool]:
    """Largest-magnitude eigenvalue estimate of a symmetric operator.

    Returns (|lambda| estimate, converged). The estimate is ||A v|| for a unit
    v, so it never exceeds the true spectral norm.
    """
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0, True
        v = w / new
        if abs(new - est) <= tol * new:
            return new, True
        est = new
    return est, False


class Objective(ABC):
    """Nonnegative smooth objective with analytic oracles."""

    dim: int
    f_star: float | None = None

    @abstractmethod
    def evaluate(self, theta) -> Evaluation:
        ...

    def value(self, theta) -> float:
        return self.evaluate(theta).value

    @abstractmethod
    def hvp(self, theta, v) -> np.ndarray:
        ...

    @abstractmethod
    def profile(self) -> SmoothnessProfile:
        ...

    def monitor(self, theta) -> float | None:
        """Per-iterate scalar worth tracing (optimal-action probability etc.)."""
        return None

    def _check_pair(self, theta, v):
        return as_param(theta, self.dim), as_param(v, self.dim)


class FiniteSum(Objective):
    """Objective that is an average of n per-sample terms."""

    n_samples: int

    @abstractmethod
    def component(self, i: int) -> Objective:
        ...
