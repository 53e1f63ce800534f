"""Sampling-based checks of smoothness and domination inequalities.

Every check compares a left-hand side against a bound at sampled points and
records the relative slack (lhs - rhs) / scale. A sample violates when its
slack exceeds the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linesearch import LineSearchConfig
from .objectives import (
    GLM,
    Bandit,
    Objective,
    SmoothnessProfile,
    TabularMDP,
    as_param,
    descent_constants,
    power_iteration,
)
from .optimizers import RunConfig, run_gd_ls

TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    sample: int
    lhs: float
    rhs: float
    slack: float


@dataclass
class CertReport:
    name: str
    checks_run: int = 0
    violations: list[Violation] = field(default_factory=list)
    max_violation: float = -math.inf
    tolerance: float = TOL
    inconclusive: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, sample: int, lhs: float, rhs: float, scale: float = 1.0) -> None:
        self.checks_run += 1
        if math.isinf(rhs) and rhs > 0:
            slack = -math.inf
        else:
            slack = (lhs - rhs) / scale
        self.max_violation = max(self.max_violation, slack)
        if slack > self.tolerance:
            self.violations.append(Violation(sample, lhs, rhs, slack))

    def summary(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks_run": self.checks_run,
            "violations": len(self.violations),
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "inconclusive": len(self.inconclusive),
        }


def sample_ball(dim: int, n: int, radius: float, rng: np.random.Generator, center=None) -> np.ndarray:
    """n points uniform in the l2 ball of the given radius."""
    z = rng.standard_normal((n, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    pts = z * (radius * rng.random(n) ** (1.0 / dim))[:, None]
    if center is not None:
        pts += center
    return pts


def trajectory_points(obj: Objective, n: int = 10, theta0=None) -> list[np.ndarray]:
    """Iterates of a short GD-LS run from theta0 (zero by default)."""
    theta0 = np.zeros(obj.dim) if theta0 is None else as_param(theta0, obj.dim)
    try:
        tr = run_gd_ls(obj, theta0, LineSearchConfig(), RunConfig(max_iters=n, record_iterates=True))
    except Exception:
        return []
    return [np.asarray(p) for p in tr.iterates[1 : n + 1]]


def _points(obj: Objective, n_samples: int, radius: float, seed, trajectory: bool = True) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    pts = [np.zeros(obj.dim)]
    pts += list(sample_ball(obj.dim, n_samples, radius, rng))
    if trajectory:
        pts += trajectory_points(obj)
    return pts


def _profile(obj: Objective, profile: SmoothnessProfile | None) -> SmoothnessProfile:
    return obj.profile() if profile is None else profile


def check_grad_bound(obj: Objective, n_samples: int = 1000, radius: float = 10.0, seed=0,
                     profile: SmoothnessProfile | None = None) -> CertReport:
    """||grad f|| <= nu f + omega."""
    prof = _profile(obj, profile)
    rep = CertReport("grad_bound")
    for i, theta in enumerate(_points(obj, n_samples, radius, seed)):
        ev = obj.evaluate(theta)
        rhs = prof.nu * ev.value + prof.omega
        rep.record(i, float(np.linalg.norm(ev.gradient)), rhs, 1.0 + rhs)
    return rep


def hessian_norm(obj: Objective, theta, max_iter: int = 50, tol: float = 1e-8, seed: int = 0) -> tuple[float, bool]:
    """Power-iteration estimate of ||hess f(theta)||, never above the true norm."""
    theta = as_param(theta, obj.dim)
    return power_iteration(lambda v: obj.hvp(theta, v), obj.dim, tol=tol, max_iter=max_iter, seed=seed)


def check_hessian_bound(obj: Objective, n_samples: int = 1000, radius: float = 10.0, seed=0,
                        profile: SmoothnessProfile | None = None) -> CertReport:
    """||hess f|| <= L0 + L1 f, with the norm from 50 power iterations."""
    prof = _profile(obj, profile)
    rep = CertReport("hessian_bound")
    for i, theta in enumerate(_points(obj, n_samples, radius, seed)):
        est, converged = hessian_norm(obj, theta, seed=i)
        if not converged:
            rep.inconclusive.append(i)
        rhs = prof.L0 + prof.L1 * obj.value(theta)
        rep.record(i, est, rhs, 1.0 + rhs)
    return rep


def descent_slack(obj: Objective, x, y, profile: SmoothnessProfile | None = None) -> tuple[float, float]:
    """(lhs, rhs) of f(y) <= f(x) + <grad f(x), y-x> + (A L0 + B L1 f(x))/2 ||y-x||^2."""
    prof = _profile(obj, profile)
    x, y = as_param(x, obj.dim), as_param(y, obj.dim)
    ev = obj.evaluate(x)
    d = y - x
    dd = float(d @ d)
    curv = prof.A * prof.L0 + prof.B * prof.L1 * ev.value if dd > 0 else 0.0
    return obj.value(y), ev.value + float(ev.gradient @ d) + 0.5 * curv * dd


def check_descent_inequality(obj: Objective, n_pairs: int = 1000, seed=0, radius: float = 10.0,
                             profile: SmoothnessProfile | None = None) -> CertReport:
    """Pairs with ||y - x|| <= q / L1 (radius when L1 = 0)."""
    prof = _profile(obj, profile)
    rng = np.random.default_rng(seed)
    reach = prof.q / prof.L1 if prof.L1 > 0 else radius
    rep = CertReport("descent_inequality")
    xs = _points(obj, n_pairs, radius, seed)
    for i, x in enumerate(xs):
        y = sample_ball(obj.dim, 1, reach, rng, center=x)[0]
        lhs, rhs = descent_slack(obj, x, y, prof)
        rep.record(i, lhs, rhs, 1.0 + abs(rhs))
    return rep


def domination_constant(obj: Objective, theta, mdp_variant: str = "stated") -> float:
    """mu(theta) for the softmax families.

    For the MDP, "stated" is the published constant and "visitation" the
    (1 - gamma) min rho corrected one.
    """
    if isinstance(obj, Bandit):
        return obj.monitor(theta)
    if isinstance(obj, TabularMDP):
        if mdp_variant == "stated":
            return obj.monitor(theta)
        if mdp_variant == "visitation":
            return obj.visitation_mu(theta)
        raise ValueError(f"unknown MDP variant {mdp_variant!r}")
    raise TypeError(f"no domination constant for {type(obj).__name__}")


def check_grad_dom(obj: Objective, trajectory, mdp_variant: str = "stated") -> CertReport:
    """||grad f||^zeta >= mu(theta) (f - f*) along the given iterates.

    Bandit and MDP use zeta = 1 with their closed-form mu. For the GLM the ratio
    ||grad f||^2 / (f - f*) is only recorded in `values`.
    """
    if obj.f_star is None:
        raise ValueError("gradient domination needs a known optimal value f*")
    rep = CertReport("grad_dom")
    for i, theta in enumerate(trajectory):
        ev = obj.evaluate(theta)
        gap = ev.value - obj.f_star
        gnorm = float(np.linalg.norm(ev.gradient))
        if isinstance(obj, GLM):
            rep.checks_run += 1
            rep.values.append(gnorm * gnorm / gap if gap > 0 else math.inf)
            continue
        mu = domination_constant(obj, theta, mdp_variant)
        rep.values.append(mu)
        rhs = mu * gap
        rep.record(i, rhs, gnorm, 1.0 + gnorm)
    return rep


def check_quadratic_upper(obj: Objective, u, eps: float, M: float, n_samples: int = 200, seed=0,
                          q: float | None = None, uniform: bool = False, radius: float = 10.0) -> CertReport:
    """f(theta) - f(u) <= eps/2 + [nu^2 M + B L1 M] ||theta - u||^2 / 2.

    Samples ||theta - u|| <= q / L1 with q = L1 ||u|| (start at the origin) by
    default. With `uniform`, uses nu^2 M + L for the uniform smoothness L and
    samples within `radius` of u.
    """
    prof = obj.profile()
    u = as_param(u, obj.dim)
    fu = obj.value(u)
    if not (fu <= eps <= M):
        raise ValueError(f"need f(u) <= eps <= M, got f(u)={fu:.6g}, eps={eps:.6g}, M={M:.6g}")
    if prof.omega != 0.0:
        raise ValueError("the bound needs omega = 0")
    if uniform:
        if prof.uniform_L is None:
            raise ValueError("uniform variant needs a uniform smoothness constant")
        coef, reach = prof.nu**2 * M + prof.uniform_L, radius
    else:
        if prof.L0 != 0.0:
            raise ValueError("the bound needs L0 = 0")
        if prof.L1 <= 0.0:
            raise ValueError("the bound needs L1 > 0")
        if q is None:
            q = prof.L1 * float(np.linalg.norm(u))
        B = descent_constants(q)[1]
        coef, reach = prof.nu**2 * M + B * prof.L1 * M, q / prof.L1
    rng = np.random.default_rng(seed)
    rep = CertReport("quadratic_upper")
    pts = [u] + list(sample_ball(obj.dim, n_samples, reach, rng, center=u))
    for i, theta in enumerate(pts):
        d = theta - u
        rhs = eps / 2 + coef * float(d @ d) / 2 if math.isfinite(coef) else math.inf
        rep.record(i, obj.value(theta) - fu, rhs, 1.0 + (abs(rhs) if math.isfinite(rhs) else 0.0))
    return rep


def fd_gradient(obj: Objective, theta, h: float | None = None) -> np.ndarray:
    theta = as_param(theta, obj.dim)
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(theta)))
    out = np.empty(obj.dim)
    for j in range(obj.dim):
        e = np.zeros(obj.dim)
        e[j] = h
        out[j] = (obj.value(theta + e) - obj.value(theta - e)) / (2.0 * h)
    return out


def fd_gradient_check(obj: Objective, theta, h: float | None = None, floor: float = 1e-8) -> float:
    """Max over coordinates of |fd_j - g_j| / max(||g||_inf, floor).

    The error is measured relative to the largest gradient entry so that
    near-zero coordinates do not amplify rounding noise.
    """
    if h is not None and not h > 0:
        raise ValueError("h must be positive")
    g = obj.evaluate(theta).gradient
    fd = fd_gradient(obj, theta, h)
    scale = max(float(np.max(np.abs(g))), float(np.max(np.abs(fd))), floor)
    return float(np.max(np.abs(fd - g)) / scale)


def hvp_asymmetry(obj: Objective, theta, u, v) -> float:
    """|<H u, v> - <H v, u>| relative to max(||Hu|| ||v||, ||Hv|| ||u||)."""
    hu, hv = obj.hvp(theta, u), obj.hvp(theta, v)
    scale = max(float(np.linalg.norm(hu) * np.linalg.norm(v)), float(np.linalg.norm(hv) * np.linalg.norm(u)))
    if scale == 0.0:
        return 0.0
    return abs(float(hu @ v) - float(hv @ u)) / scale
