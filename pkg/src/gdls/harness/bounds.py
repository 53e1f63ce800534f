"""Closed-form iteration bounds for GD with Armijo line-search and its variants.

`theory_bound(setting, **constants)` dispatches on a setting name. Line-search
constants lambda0, lambda1 are always recomputed from (L0, L1, nu, omega, c).
"""

from __future__ import annotations

import math

from ..objectives import SmoothnessProfile, zhang_to_nus


def _lambdas(k: dict) -> tuple[float, float]:
    prof = SmoothnessProfile(k["L0"], k["L1"], k["nu"], k.get("omega", 0.0))
    return prof.line_search_constants(k["c"])


def _need_half(c: float) -> None:
    if not 0.5 < c < 1.0:
        raise ValueError(f"this bound needs c in (1/2, 1), got {c}")


def _log_gap(f0: float, f_star: float, eps: float) -> float:
    # A run that starts within eps of the optimum needs no iterations.
    return max(math.log((f0 - f_star) / eps), 0.0) if f0 > f_star else 0.0


def _general(k: dict) -> float:
    """Case 1 (f* near the lambda0/lambda1 floor) or case 2 of the general result."""
    lam0, lam1 = _lambdas(k)
    R, f_star, f0, eps = k["R"], k["f_star"], k["f0"], k["eps"]
    tail = (f_star / eps + 1.0) * _log_gap(f0, f_star, eps)
    case1 = lam1 > 0 and f_star >= lam0 / lam1 - eps
    if case1:
        return max(2.0 * R * lam1, 1.0) * tail
    return 2.0 * lam0 * R / eps + max(2.0 * R * lam1, 1.0) * tail


def _convex_gen(k: dict) -> float:
    _, lam1 = _lambdas({**k, "L0": 0.0, "omega": 0.0})
    return max(2.0 * lam1 * k["R"], 1.0) * (k["f_star"] / k["eps"] + 1.0) * _log_gap(k["f0"], k["f_star"], k["eps"])


def _convex_iterate(k: dict) -> float:
    c = k["c"]
    _need_half(c)
    _, lam1 = _lambdas({**k, "L0": 0.0, "omega": 0.0})
    return c * lam1 * k["R"] / (2.0 * c - 1.0) * (1.0 + k["f_u"] / k["eps"])


def _logistic_iterate(k: dict) -> float:
    c = k["c"]
    _need_half(c)
    m = k.get("max_norm", 1.0)
    coef = 3.0 * (8.0 * m * m) * (8.0 * m + 1.0) * c / ((2.0 * c - 1.0) * (1.0 - c))
    return coef / k["gamma"] ** 2 * math.log(1.0 / k["eps"]) ** 2


def _graddom(k: dict) -> float:
    _, lam1 = _lambdas(k)
    mu = k["mu"]
    if not mu > 0:
        raise ValueError("mu must be positive")
    f_star = k.get("f_star", 0.0)
    return max(1.0, 2.0 * lam1 / mu**2) * (f_star / k["eps"] + 1.0) * _log_gap(k["f0"], f_star, k["eps"])


def _bandit(k: dict) -> float:
    K = k["K"]
    return _graddom({"L0": 0.0, "L1": 72.0, "nu": 24.0, "omega": 0.0, "c": k.get("c", 0.5),
                     "mu": 1.0 / K, "f_star": k.get("f_star", 0.0), "f0": k["f0"], "eps": k["eps"]})


def _kappa(k: dict) -> float:
    if "kappa" in k:
        return k["kappa"]
    g = k["gamma"]
    return 3.0 + 4.0 * (k["rho_min_inv"] - (1.0 - g)) / (1.0 - g)


def _mdp(k: dict) -> float:
    kap, S, g, eps, mu = _kappa(k), k["S"], k["gamma"], k["eps"], k["mu"]
    if not mu > 0:
        raise ValueError("mu must be positive")
    return 384.0 / mu * kap**3 * S**1.5 * max(math.log(1.0 / ((1.0 - g) * eps)), 0.0)


def _pl(k: dict) -> float:
    lam0, lam1 = _lambdas(k)
    eps = k["eps"]
    if lam1 <= 0.0:
        raise ValueError("the PL bound needs lambda1 > 0 so that eps < lambda0/lambda1 is defined")
    if lam0 <= 0.0:
        raise ValueError("the PL bound needs lambda0 > 0")
    if not 0.0 < eps < lam0 / lam1:
        raise ValueError(f"the PL bound needs eps in (0, lambda0/lambda1) = (0, {lam0 / lam1:.6g})")
    return 2.0 / k["mu"] * (lam1 * k["f0"] + lam0 * math.log(lam0 / (lam1 * eps)))


def _zhang(k: dict) -> float:
    prof = zhang_to_nus(k["Lc"], k["Lg"])
    return _general({**k, "L0": prof.L0, "L1": prof.L1, "nu": prof.nu, "omega": prof.omega})


def _polyak(k: dict) -> float:
    c = k["c"]
    _need_half(c)
    return c * k["nu"] ** 2 * k["R"] / (2.0 * c - 1.0) * (1.0 + k["f_u"] / k["eps"]) ** 2


def _logistic_polyak(k: dict) -> float:
    c = k["c"]
    _need_half(c)
    return 4.0 * c * c / ((2.0 * c - 1.0) * k["gamma"] ** 2) * math.log(1.0 / k["eps"]) ** 2


def _logistic_polyak_eps(k: dict) -> float:
    c, a = k["c"], k["alpha"]
    _need_half(c)
    if not a > 0:
        raise ValueError("alpha must be positive")
    return (1.0 + a) ** 2 * c * c / (a * a * (2.0 * c - 1.0) * k["gamma"] ** 2) * math.log(1.0 / k["eps"]) ** 2


def _sgd_logistic(k: dict) -> float:
    c = k["c"]
    _need_half(c)
    m = k.get("max_norm", 1.0)
    _, lam1 = _lambdas({"L0": 0.0, "L1": 8.0 * m * m, "nu": 8.0 * m, "c": c})
    return 4.0 / k["gamma"] ** 2 * math.log(1.0 / k["eps"] ** 2) ** 2 * c * lam1 / (2.0 * c - 1.0)


# setting -> (function, required constants)
SETTINGS = {
    "general": (_general, ("L0", "L1", "nu", "omega", "c", "R", "f_star", "f0", "eps")),
    "convex-gen": (_convex_gen, ("L1", "nu", "c", "R", "f_star", "f0", "eps")),
    "convex-iterate": (_convex_iterate, ("L1", "nu", "c", "R", "f_u", "eps")),
    "logistic-iterate": (_logistic_iterate, ("c", "gamma", "eps")),
    "graddom": (_graddom, ("L1", "nu", "c", "mu", "f0", "eps")),
    "bandit": (_bandit, ("K", "f0", "eps")),
    "mdp": (_mdp, ("mu", "S", "gamma", "eps")),
    "pl": (_pl, ("L0", "L1", "nu", "omega", "c", "mu", "f0", "eps")),
    "zhang": (_zhang, ("Lc", "Lg", "c", "R", "f_star", "f0", "eps")),
    "polyak": (_polyak, ("c", "nu", "R", "f_u", "eps")),
    "logistic-polyak": (_logistic_polyak, ("c", "gamma", "eps")),
    "logistic-polyak-eps": (_logistic_polyak_eps, ("c", "gamma", "eps", "alpha")),
    "sgd-logistic": (_sgd_logistic, ("c", "gamma", "eps")),
}


def theory_bound(setting: str, **constants: float) -> float:
    """Iteration count guaranteed by the named result.

    Settings: general, convex-gen, convex-iterate, logistic-iterate, graddom,
    bandit, mdp, pl, zhang, polyak, logistic-polyak, logistic-polyak-eps,
    sgd-logistic. `R` is a squared distance; `c` defaults to 1/2 for bandit.
    The mdp setting takes either `kappa` or `rho_min_inv` (min_s 1/rho(s)).
    """
    try:
        fn, required = SETTINGS[setting]
    except KeyError:
        raise ValueError(f"unknown setting {setting!r}; choose from {', '.join(SETTINGS)}") from None
    missing = [k for k in required if k not in constants]
    if setting == "mdp" and "kappa" not in constants and "rho_min_inv" not in constants:
        missing.append("rho_min_inv")
    if missing:
        raise ValueError(f"setting {setting!r} is missing constant(s): {', '.join(missing)}")
    eps = constants["eps"]
    if not eps > 0:
        raise ValueError("eps must be positive")
    if "c" in constants and not 0.0 < constants["c"] < 1.0:
        raise ValueError("c must lie in (0, 1)")
    return float(fn({k: float(v) for k, v in constants.items()}))
