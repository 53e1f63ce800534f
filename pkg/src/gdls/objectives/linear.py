"""Objectives built on a linear predictor over a Dataset."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.special import expit

from ..errors import EvaluationRangeError, LabelError
from .base import Dataset, Evaluation, FiniteSum, SmoothnessProfile, as_param, power_iteration, zhang_to_nus

EXP_LIMIT = 700.0


def _check_pm1(labels: np.ndarray) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if not np.all((y == 1.0) | (y == -1.0)):
        bad = y[(y != 1.0) & (y != -1.0)][0]
        raise LabelError(f"labels must be +1 or -1, found {bad}")
    return y


class _LinearModel(FiniteSum):
    def __init__(self, data: Dataset):
        self.data = data
        self.X = data.features
        self.n_samples = data.n
        self.dim = data.d
        self._components: dict[int, FiniteSum] = {}

    @cached_property
    def gram_lambda_max(self) -> float:
        """lambda_max(X^T X) by power iteration."""
        X = self.X
        lam, _ = power_iteration(lambda v: X.T @ (X @ v), X.shape[1], tol=1e-10, max_iter=10_000, seed=0)
        return lam

    def component(self, i: int):
        if not 0 <= i < self.n_samples:
            raise IndexError(i)
        comp = self._components.get(i)
        if comp is None:
            comp = self._make_component(self.data.row(i))
            self._components[i] = comp
        return comp

    def _make_component(self, row: Dataset):
        return type(self)(row)


class LinearRegression(_LinearModel):
    """f(theta) = ||X theta - y||^2 / (2n)."""

    def __init__(self, data: Dataset):
        super().__init__(data)
        self.y = np.asarray(data.labels, dtype=np.float64)
        if not np.all(np.isfinite(self.y)):
            raise LabelError("regression targets must be finite")

    def evaluate(self, theta) -> Evaluation:
        theta = as_param(theta, self.dim)
        r = self.X @ theta - self.y
        n = self.n_samples
        return Evaluation(float(r @ r) / (2 * n), self.X.T @ r / n)

    def value(self, theta) -> float:
        r = self.X @ as_param(theta, self.dim) - self.y
        return float(r @ r) / (2 * self.n_samples)

    def hvp(self, theta, v):
        _, v = self._check_pair(theta, v)
        return self.X.T @ (self.X @ v) / self.n_samples

    def profile(self) -> SmoothnessProfile:
        L = self.gram_lambda_max / self.n_samples
        p = zhang_to_nus(L, 0.0)
        return SmoothnessProfile(p.L0, p.L1, p.nu, p.omega, uniform_L=L)


class Logistic(_LinearModel):
    """Average logistic loss log(1 + exp(-y <x, theta>))."""

    def __init__(self, data: Dataset, f_star: float | None = None):
        super().__init__(data)
        self.y = _check_pm1(data.labels)
        self.yX = self.y[:, None] * self.X
        if f_star is None and data.meta.get("separable"):
            f_star = 0.0
        self.f_star = f_star

    def _make_component(self, row):
        return Logistic(row, f_star=0.0 if self.f_star == 0.0 else None)

    def margins(self, theta) -> np.ndarray:
        return self.yX @ as_param(theta, self.dim)

    def evaluate(self, theta) -> Evaluation:
        m = self.margins(theta)
        val = float(np.mean(np.logaddexp(0.0, -m)))
        grad = -(self.yX.T @ expit(-m)) / self.n_samples
        return Evaluation(val, grad)

    def value(self, theta) -> float:
        return float(np.mean(np.logaddexp(0.0, -self.margins(theta))))

    def hvp(self, theta, v):
        theta, v = self._check_pair(theta, v)
        m = self.yX @ theta
        w = expit(m) * expit(-m)
        return self.X.T @ (w * (self.X @ v)) / self.n_samples

    def profile(self) -> SmoothnessProfile:
        m = self.data.max_row_norm2
        return SmoothnessProfile(
            L0=0.0, L1=8.0 * m * m, nu=8.0 * m, omega=0.0,
            uniform_L=self.gram_lambda_max / (4.0 * self.n_samples),
        )


class Exponential(_LinearModel):
    """Average exponential loss exp(-y <x, theta>)."""

    def __init__(self, data: Dataset, f_star: float | None = None):
        super().__init__(data)
        self.y = _check_pm1(data.labels)
        self.yX = self.y[:, None] * self.X
        if f_star is None and data.meta.get("separable"):
            f_star = 0.0
        self.f_star = f_star

    def _make_component(self, row):
        return Exponential(row, f_star=0.0 if self.f_star == 0.0 else None)

    def _weights(self, theta) -> np.ndarray:
        z = -(self.yX @ as_param(theta, self.dim))
        top = float(np.max(z))
        if top > EXP_LIMIT:
            raise EvaluationRangeError(f"exponent {top:.6g} exceeds {EXP_LIMIT}")
        return np.exp(z)

    def evaluate(self, theta) -> Evaluation:
        w = self._weights(theta)
        return Evaluation(float(np.mean(w)), -(self.yX.T @ w) / self.n_samples)

    def value(self, theta) -> float:
        return float(np.mean(self._weights(theta)))

    def hvp(self, theta, v):
        theta, v = self._check_pair(theta, v)
        w = self._weights(theta)
        return self.X.T @ (w * (self.X @ v)) / self.n_samples

    def profile(self) -> SmoothnessProfile:
        m = self.data.max_row_norm2
        return SmoothnessProfile(L0=0.0, L1=8.0 * m * m, nu=8.0 * m, omega=0.0)


# "simple": rounded (9/16, 9, 9, 1) scaled by the row norm; "refined": the tighter derivation.
GLM_CONSTANTS = ("simple", "refined")


class GLM(_LinearModel):
    """Squared loss of a sigmoid link, (sigma(<x, theta>) - y)^2 / 2 averaged."""

    def __init__(self, data: Dataset, theta_star=None, constants: str = "simple"):
        super().__init__(data)
        y = np.asarray(data.labels, dtype=np.float64)
        if not np.all((y >= 0.0) & (y <= 1.0)):
            raise LabelError("GLM labels must lie in [0, 1]")
        if constants not in GLM_CONSTANTS:
            raise ValueError(f"constants must be one of {GLM_CONSTANTS}, got {constants!r}")
        self.y = y
        self.constants = constants
        self.theta_star = None if theta_star is None else as_param(theta_star, self.dim)
        if self.theta_star is not None:
            self.f_star = 0.0 if self.value(self.theta_star) == 0.0 else None

    def _make_component(self, row):
        return GLM(row, theta_star=self.theta_star, constants=self.constants)

    def evaluate(self, theta) -> Evaluation:
        p = expit(self.X @ as_param(theta, self.dim))
        r = p - self.y
        val = float(r @ r) / (2 * self.n_samples)
        return Evaluation(val, self.X.T @ (r * p * (1.0 - p)) / self.n_samples)

    def value(self, theta) -> float:
        r = expit(self.X @ as_param(theta, self.dim)) - self.y
        return float(r @ r) / (2 * self.n_samples)

    def hvp(self, theta, v):
        theta, v = self._check_pair(theta, v)
        p = expit(self.X @ theta)
        s = p * (1.0 - p)
        w = s * s + (p - self.y) * (1.0 - 2.0 * p) * s
        return self.X.T @ (w * (self.X @ v)) / self.n_samples

    def profile(self) -> SmoothnessProfile:
        m = self.data.max_row_norm2
        if self.constants == "simple":
            return SmoothnessProfile(L0=9.0 / 16.0 * m * m, L1=9.0 * m * m, nu=9.0 * m, omega=m)
        r2 = math.sqrt(2.0)
        k = (16.0 * r2 + 1.0) / math.sqrt(8.0)
        return SmoothnessProfile(
            L0=(8.0 + r2) / (16.0 * r2) * m * m, L1=k * m * m, nu=k * m, omega=m / math.sqrt(8.0)
        )

    def monitor(self, theta):
        # Empirical PL ratio ||grad||^2 / f; the closed-form constant is not asserted.
        ev = self.evaluate(theta)
        if ev.value <= 0.0:
            return None
        return float(ev.gradient @ ev.gradient) / ev.value


class Multiclass(_LinearModel):
    """Softmax cross-entropy with parameter blocks theta = [theta_1 .. theta_C]."""

    def __init__(self, data: Dataset, n_classes: int | None = None):
        labels = np.asarray(data.labels)
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise LabelError("multiclass labels must be integer class indices")
        labels = labels.astype(np.int64)
        if n_classes is None:
            n_classes = int(labels.max()) + 1
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if labels.min() < 0 or labels.max() >= n_classes:
            raise LabelError(f"class index out of range [0, {n_classes})")
        super().__init__(data)
        self.labels = labels
        self.n_classes = n_classes
        self.dim = n_classes * data.d
        self._rows = np.arange(data.n)

    def _make_component(self, row):
        return Multiclass(row, n_classes=self.n_classes)

    def _blocks(self, theta) -> np.ndarray:
        return as_param(theta, self.dim).reshape(self.n_classes, self.data.d)

    def probabilities(self, theta) -> np.ndarray:
        Z = self.X @ self._blocks(theta).T
        Z -= Z.max(axis=1, keepdims=True)
        E = np.exp(Z)
        return E / E.sum(axis=1, keepdims=True)

    def _loss(self, Z: np.ndarray) -> float:
        # (max - z_y) + log1p(sum of the non-max terms) keeps precision for tiny losses.
        top = Z.argmax(axis=1)
        zmax = Z[self._rows, top]
        E = np.exp(Z - zmax[:, None])
        E[self._rows, top] = 0.0
        per = (zmax - Z[self._rows, self.labels]) + np.log1p(E.sum(axis=1))
        return float(np.mean(per))

    def evaluate(self, theta) -> Evaluation:
        Z = self.X @ self._blocks(theta).T
        val = self._loss(Z)
        P = np.exp(Z - Z.max(axis=1, keepdims=True))
        P /= P.sum(axis=1, keepdims=True)
        P[self._rows, self.labels] -= 1.0
        return Evaluation(val, (P.T @ self.X).ravel() / self.n_samples)

    def value(self, theta) -> float:
        return self._loss(self.X @ self._blocks(theta).T)

    def hvp(self, theta, v):
        P = self.probabilities(theta)
        V = as_param(v, self.dim).reshape(self.n_classes, self.data.d)
        W = self.X @ V.T
        HW = P * W - P * np.sum(P * W, axis=1, keepdims=True)
        return (HW.T @ self.X).ravel() / self.n_samples

    def profile(self) -> SmoothnessProfile:
        m1 = self.data.max_row_norm1
        return SmoothnessProfile(L0=0.0, L1=32.0 * m1 * m1, nu=16.0 * self.data.max_row_norm2, omega=0.0)
