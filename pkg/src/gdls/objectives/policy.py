"""Softmax policy objectives in the exact (known model) setting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Evaluation, Objective, SmoothnessProfile, as_param


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass(frozen=True, eq=False)
class MabInstance:
    rewards: np.ndarray

    def __post_init__(self):
        r = np.array(self.rewards, dtype=np.float64)
        if r.ndim != 1 or r.shape[0] < 2:
            raise ValueError("a bandit needs at least two arms")
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise ValueError("rewards must lie in [0, 1]")
        r.setflags(write=False)
        object.__setattr__(self, "rewards", r)

    @property
    def K(self) -> int:
        return self.rewards.shape[0]

    @property
    def a_star(self) -> int:
        return int(np.argmax(self.rewards))


@dataclass(frozen=True, eq=False)
class MdpInstance:
    P: np.ndarray
    r: np.ndarray
    rho: np.ndarray
    gamma: float

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        r = np.array(self.r, dtype=np.float64)
        rho = np.array(self.rho, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"P must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if r.shape != (S, A):
            raise ValueError(f"r must have shape {(S, A)}, got {r.shape}")
        if rho.shape != (S,):
            raise ValueError(f"rho must have shape {(S,)}, got {rho.shape}")
        if np.any(P < 0.0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("every P(s, a, .) must be a probability vector")
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise ValueError("rewards must lie in [0, 1]")
        if np.any(rho <= 0.0) or abs(rho.sum() - 1.0) > 1e-12:
            raise ValueError("rho must be a strictly positive distribution")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        for a in (P, r, rho):
            a.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "rho", rho)

    @property
    def S(self) -> int:
        return self.P.shape[0]

    @property
    def A(self) -> int:
        return self.P.shape[1]


class Bandit(Objective):
    """f(theta) = r(a*) - <pi_theta, r> for a softmax policy over K arms."""

    f_star = 0.0

    def __init__(self, inst: MabInstance):
        self.inst = inst
        self.r = inst.rewards
        self.dim = inst.K
        self.a_star = inst.a_star
        self.r_star = float(self.r[self.a_star])

    def policy(self, theta) -> np.ndarray:
        return softmax(as_param(theta, self.dim))

    def evaluate(self, theta) -> Evaluation:
        pi = self.policy(theta)
        avg = float(pi @ self.r)
        return Evaluation(max(self.r_star - avg, 0.0), -pi * (self.r - avg))

    def value(self, theta) -> float:
        return max(self.r_star - float(self.policy(theta) @ self.r), 0.0)

    def hvp(self, theta, v):
        theta, v = self._check_pair(theta, v)
        pi = softmax(theta)
        adv = self.r - pi @ self.r
        # Hessian of <pi, r>: diag(pi * adv) - pi (pi*adv)^T - (pi*adv) pi^T
        pa = pi * adv
        hv = pa * v - pi * (pa @ v) - pa * (pi @ v)
        return -hv

    def profile(self) -> SmoothnessProfile:
        return SmoothnessProfile(L0=0.0, L1=72.0, nu=24.0, omega=0.0)

    def monitor(self, theta) -> float:
        """pi_theta(a*), the gradient-domination constant."""
        return float(self.policy(theta)[self.a_star])


class TabularMDP(Objective):
    """f(theta) = V*(rho) - V^{pi_theta}(rho) with a per-state softmax policy.

    theta is laid out row-major as theta[s * A + a].
    """

    f_star = 0.0

    def __init__(self, inst: MdpInstance, vi_tol: float = 1e-12, fd_step: float = 1e-5):
        self.inst = inst
        self.S, self.A = inst.S, inst.A
        self.dim = self.S * self.A
        self.gamma = inst.gamma
        self.fd_step = fd_step
        self._eye = np.eye(self.S)
        self.v_star, self.a_star = self._optimal(vi_tol)
        self.value_star = float(inst.rho @ self.v_star)

    def _optimal(self, tol: float):
        P, r, g = self.inst.P, self.inst.r, self.gamma
        v = np.zeros(self.S)
        for _ in range(100_000):
            new = np.max(r + g * P @ v, axis=1)
            done = np.max(np.abs(new - v)) <= tol
            v = new
            if done:
                break
        greedy = np.argmax(r + g * P @ v, axis=1)
        # Exact evaluation of the greedy policy removes the iteration's residual.
        idx = np.arange(self.S)
        exact = np.linalg.solve(self._eye - g * P[idx, greedy], r[idx, greedy])
        return np.maximum(exact, v), greedy

    def policy(self, theta) -> np.ndarray:
        return softmax(as_param(theta, self.dim).reshape(self.S, self.A), axis=1)

    def _solve(self, pi: np.ndarray):
        P, r, g = self.inst.P, self.inst.r, self.gamma
        P_pi = np.einsum("sa,sat->st", pi, P)
        r_pi = np.sum(pi * r, axis=1)
        M = self._eye - g * P_pi
        v = np.linalg.solve(M, r_pi)
        return v, M

    def values(self, theta) -> np.ndarray:
        """V^{pi_theta}(s) for every state."""
        return self._solve(self.policy(theta))[0]

    def evaluate(self, theta) -> Evaluation:
        pi = self.policy(theta)
        v, M = self._solve(pi)
        g = self.gamma
        q = self.inst.r + g * self.inst.P @ v
        adv = q - v[:, None]
        # Normalized discounted state visitation from rho.
        d = (1.0 - g) * np.linalg.solve(M.T, self.inst.rho)
        grad_v = d[:, None] * pi * adv / (1.0 - g)
        f = max(self.value_star - float(self.inst.rho @ v), 0.0)
        return Evaluation(f, -grad_v.ravel())

    def value(self, theta) -> float:
        v, _ = self._solve(self.policy(theta))
        return max(self.value_star - float(self.inst.rho @ v), 0.0)

    def hvp(self, theta, v):
        theta, v = self._check_pair(theta, v)
        h = self.fd_step * (1.0 + float(np.linalg.norm(theta)))
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.zeros(self.dim)
        u = v / nv
        gp = self.evaluate(theta + h * u).gradient
        gm = self.evaluate(theta - h * u).gradient
        return (gp - gm) / (2.0 * h) * nv

    def mismatch_constant(self) -> float:
        """3 + 4 (min_s 1/rho(s) - (1 - gamma)) / (1 - gamma)."""
        g = self.gamma
        return 3.0 + 4.0 * (float(np.min(1.0 / self.inst.rho)) - (1.0 - g)) / (1.0 - g)

    def profile(self) -> SmoothnessProfile:
        k = self.mismatch_constant()
        return SmoothnessProfile(L0=0.0, L1=8.0 * k * k * self.S, nu=8.0 * k * math.sqrt(self.S), omega=0.0)

    def optimal_action_prob(self, theta) -> float:
        """min_s pi_theta(a*(s)|s)."""
        pi = self.policy(theta)
        return float(np.min(pi[np.arange(self.S), self.a_star]))

    def monitor(self, theta) -> float:
        """min_s pi(a*(s)|s) / (sqrt(S) min_s rho(s)), the published constant."""
        return self.optimal_action_prob(theta) / (math.sqrt(self.S) * float(np.min(self.inst.rho)))

    def visitation_mu(self, theta) -> float:
        """(1 - gamma) min_s rho(s) min_s pi(a*(s)|s) / sqrt(S).

        Bounds the distribution mismatch by 1 / ((1 - gamma) min rho) instead of
        dividing by min rho; this form holds on sampled instances where the
        published one does not.
        """
        rho_min = float(np.min(self.inst.rho))
        return (1.0 - self.gamma) * rho_min * self.optimal_action_prob(theta) / math.sqrt(self.S)
