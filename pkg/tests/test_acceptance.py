"""Acceptance suite: criteria 1 to 11 at desk scale.

Each test records its checks through the `verdict` fixture; the terminal
summary prints one PASS/FAIL line per criterion. Checks that cannot hold are
still run as specified and marked xfail(strict=True).
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from gdls.certify import (
    check_descent_inequality,
    check_grad_bound,
    check_hessian_bound,
    fd_gradient_check,
    hessian_norm,
    hvp_asymmetry,
    sample_ball,
)
from gdls.harness import fit_rate, load_batch, load_experiment, run_experiment, theory_bound
from gdls.harness.report import first_below
from gdls.linesearch import LineSearchConfig, armijo_floor
from gdls.objectives import (
    GLM,
    Bandit,
    Dataset,
    Exponential,
    LinearRegression,
    Logistic,
    Multiclass,
    TabularMDP,
)
from gdls.optimizers import RunConfig, run_gd_ls
from gdls.problems import gen_bandit, gen_glm_realizable, gen_mdp, gen_separable_logistic

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.acceptance


def desk_families() -> dict:
    data, _ = gen_separable_logistic(200, 20, 0.1, 0)
    rng = np.random.default_rng(0)
    X = data.features[:100]
    classes = np.argmax(X @ rng.standard_normal((3, 20)).T, axis=1)
    glm_data, theta_star = gen_glm_realizable(500, 20, 1.0, 0)
    return {
        "logistic": Logistic(data),
        "exponential": Exponential(data),
        "multiclass": Multiclass(Dataset(X, classes), n_classes=3),
        "glm": GLM(glm_data, theta_star),
        "bandit": Bandit(gen_bandit(10, 0)),
        "mdp": TabularMDP(gen_mdp(4, 3, 0.9, 0)),
        "least-squares": LinearRegression(Dataset(data.features[:50], data.features[:50] @ rng.standard_normal(20))),
    }


@pytest.fixture(scope="module")
def families():
    return desk_families()


def untouched(cfg):
    """Drop output paths so acceptance runs never write into the repository."""
    return cfg.model_copy(update={"output": cfg.output.model_copy(update={"trace": None, "summary": None, "report": None})})


def batch_runs(name: str) -> dict:
    _, exps = load_batch(CONFIGS / name)
    return {e.name: run_experiment(untouched(e), write=False) for e in exps}


# 1. Guaranteed step size

def test_step_floor_never_violated(families, verdict):
    start = time.perf_counter()
    worst, total = math.inf, 0
    for name in ("logistic", "exponential", "multiclass", "glm", "bandit"):
        obj = families[name]
        for c in (0.1, 0.5, 0.9):
            ls = LineSearchConfig(c=c)
            lam0, lam1 = obj.profile().line_search_constants(c)
            trace = run_gd_ls(obj, np.zeros(obj.dim), ls, RunConfig(max_iters=500))
            for row in trace.rows:
                if math.isnan(row.step):
                    continue
                floor = armijo_floor(row.f, c, ls.beta, ls.eta_max, lam0, lam1)
                # Second route: the floor written out from the constants.
                direct = min(ls.eta_max, ls.beta / (lam0 + lam1 * row.f))
                assert floor == pytest.approx(direct, rel=1e-15)
                worst = min(worst, row.step / floor)
                total += 1
    elapsed = time.perf_counter() - start
    ok = verdict(1, "step >= min(eta_max, beta/(lambda0 + lambda1 f))", worst >= 1.0 and elapsed < 10,
                 f"{total} steps, min step/floor {worst:.3g}, {elapsed:.1f}s")
    assert ok


# 2. Assumption certification

def test_assumptions_certified(families, verdict):
    start = time.perf_counter()
    failures = []
    for name, obj in families.items():
        for rep in (check_grad_bound(obj, 1000, 10.0, 0), check_hessian_bound(obj, 1000, 10.0, 0),
                    check_descent_inequality(obj, 1000, 0, 10.0)):
            if not rep.passed:
                failures.append(f"{name}/{rep.name} max slack {rep.max_violation:.3g}")
    elapsed = time.perf_counter() - start
    ok = verdict(2, "grad, Hessian and descent bounds", not failures and elapsed < 60,
                 f"{len(families)} families, {elapsed:.1f}s" + (f", failures: {failures}" if failures else ""))
    assert ok


@pytest.mark.xfail(strict=True, reason="published nu is loose by more than 2x on every family; see decisions ledger")
def test_halved_nu_probe_fails(families, verdict):
    caught = []
    for name, obj in families.items():
        rep = check_grad_bound(obj, 1000, 10.0, 0, obj.profile().scaled(nu=0.5))
        if not rep.passed:
            caught.append(name)
    ok = verdict(2, "nu/2 probe is caught", len(caught) == len(families),
                 f"caught on {caught or 'no family'}")
    assert ok


def test_shrunk_constants_are_caught(families, verdict):
    obj = families["logistic"]
    nu = check_grad_bound(obj, 1000, 10.0, 0, obj.profile().scaled(nu=0.01))
    l1 = check_hessian_bound(obj, 1000, 10.0, 0, obj.profile().scaled(L1=0.01))
    verdict(2, "nu/100 and L1/100 probes are caught (supplementary)", not nu.passed and not l1.passed,
            f"{len(nu.violations)} and {len(l1.violations)} violations")
    assert not nu.passed and not l1.passed


# 3. Counterexample instance

def test_counterexample_instance(verdict):
    obj = Logistic(Dataset(np.array([[2.0], [2.0]]), np.array([1.0, -1.0])))
    grad = float(np.linalg.norm(obj.evaluate(np.zeros(1)).gradient))
    est, converged = hessian_norm(obj, np.zeros(1), max_iter=100, tol=1e-14)
    ok = verdict(3, "gradient 0, Hessian norm 1 at the origin", grad <= 1e-14 and abs(est - 1.0) <= 1e-10 and converged,
                 f"|grad| {grad:.2g}, ||H|| {est!r}")
    assert ok


# 4. Separation on separable logistic regression

@pytest.fixture(scope="module")
def separation():
    start = time.perf_counter()
    runs = batch_runs("separation.yaml")
    return runs, time.perf_counter() - start


def test_separation_objective_and_steps(separation, verdict):
    runs, elapsed = separation
    ls, gd = runs["gd-ls"].trace, runs["gd-const"].trace
    gd_fit = fit_rate(gd)
    steps = ls.steps[np.isfinite(ls.steps)]
    ratio = steps.max() / steps[0]
    checks = [
        verdict(4, "f_GD-LS <= 1e-4", ls.final_f <= 1e-4, f"{ls.final_f:.3g} after {ls.iterations} iterations"),
        verdict(4, "f_GD-LS <= 0.1 f_GD(1/L)", ls.final_f <= 0.1 * gd.final_f,
                f"{ls.final_f:.3g} vs {gd.final_f:.3g} after {gd.iterations} iterations"),
        verdict(4, "GD(1/L) sublinear", gd_fit.kind == "sublinear",
                f"{gd_fit.kind} ({gd_fit.sublinear_model}), geometric r2 {gd_fit.r2:.3f}"),
        verdict(4, "max step / first step >= 10", ratio >= 10, f"{ratio:.3g}"),
        verdict(4, "runtime < 30s", elapsed < 30, f"{elapsed:.1f}s"),
    ]
    assert all(checks)


@pytest.mark.xfail(strict=True, reason="the fitted GD-LS tail is short and period-2; see decisions ledger")
def test_separation_line_search_rate_is_linear(separation, verdict):
    runs, _ = separation
    fit = fit_rate(runs["gd-ls"].trace)
    ok = verdict(4, "GD-LS linear", fit.kind == "linear",
                 f"{fit.kind}, slope {fit.slope:.3g}, r2 {fit.r2:.4f} over {fit.rows} rows")
    assert ok


# 5. Bandit

def test_bandit_linear_rate(verdict):
    start = time.perf_counter()
    res = run_experiment(untouched(load_experiment(CONFIGS / "bandit.yaml")), write=False)
    elapsed = time.perf_counter() - start
    trace, K, eps = res.trace, 10, 1e-8
    f0 = trace.rows[0].f
    observed = first_below(trace, eps)
    bound = theory_bound("bandit", K=K, f0=f0, eps=eps)
    assert bound == pytest.approx(21600 * K**2 * (0.0 / eps + 1) * math.log(f0 / eps), rel=1e-12)
    pi_star = [r.extra for r in trace.rows]
    fit = fit_rate(trace)
    checks = [
        verdict(5, "reaches f <= 1e-8 within the bound", observed is not None and observed <= bound,
                f"{observed} iterations, bound {bound:.4g}"),
        verdict(5, "pi(a*) >= 1/K throughout", min(pi_star) >= 1.0 / K, f"min {min(pi_star):.4g}"),
        verdict(5, "rate linear", fit.kind == "linear", f"slope {fit.slope:.3g}, r2 {fit.r2:.4f}"),
        verdict(5, "runtime < 10s", elapsed < 10, f"{elapsed:.1f}s"),
    ]
    assert all(checks)


# 6. Tabular MDP

def test_mdp_linear_rate(verdict):
    start = time.perf_counter()
    res = run_experiment(untouched(load_experiment(CONFIGS / "mdp.yaml")), write=False)
    elapsed = time.perf_counter() - start
    trace, eps = res.trace, 1e-6
    mu = min(r.extra for r in trace.rows)
    obj = res.problem.objective
    bound = theory_bound("mdp", mu=mu, S=obj.S, gamma=obj.gamma, kappa=res.summary["constants"]["kappa"], eps=eps)
    observed = first_below(trace, eps)
    fit = fit_rate(trace)
    checks = [
        verdict(6, "reaches f <= 1e-6 within the bound at realized mu", observed is not None and observed <= bound,
                f"{observed} iterations, mu {mu:.4g}, bound {bound:.4g}"),
        verdict(6, "rate linear", fit.kind == "linear", f"slope {fit.slope:.3g}, r2 {fit.r2:.4f}"),
        verdict(6, "runtime < 60s", elapsed < 60, f"{elapsed:.1f}s"),
    ]
    assert all(checks)


# 7. Realizable GLM

def test_glm_line_search_beats_constant_step(verdict):
    start = time.perf_counter()
    runs = batch_runs("glm.yaml")
    elapsed = time.perf_counter() - start
    ls, gd = runs["gd-ls"].trace, runs["gd-const"].trace
    checks = [
        verdict(7, "f_GD-LS <= f_GD(1/L) at 2000 iterations", ls.final_f <= gd.final_f,
                f"{ls.final_f:.3g} ({ls.terminal_reason} at {ls.iterations}) vs {gd.final_f:.3g}"),
        verdict(7, "terminal f_GD-LS <= 1e-6", ls.final_f <= 1e-6, f"{ls.final_f:.3g}"),
        verdict(7, "runtime < 30s", elapsed < 30, f"{elapsed:.1f}s"),
    ]
    assert all(checks)


# 8. Polyak step sizes

def test_polyak_variants(verdict):
    start = time.perf_counter()
    runs = batch_runs("polyak.yaml")
    elapsed = time.perf_counter() - start
    eps = 1e-5
    checks = []
    for name, setting in (("polyak-margin", "logistic-polyak"), ("polyak-eps", "logistic-polyak-eps")):
        res = runs[name]
        consts = res.summary["constants"]
        kw = dict(c=res.summary["optimizer"]["c"], gamma=consts["realized_margin"], eps=eps)
        if setting == "logistic-polyak-eps":
            kw["alpha"] = consts["alpha"]
        bound = theory_bound(setting, **kw)
        observed = first_below(res.trace, 2 * eps)
        checks.append(verdict(8, f"{name} reaches 2 eps within bound", observed is not None and observed <= bound,
                              f"{observed} iterations, bound {bound:.4g}"
                              + (f", alpha {kw['alpha']:.3g}" if "alpha" in kw else "")))
    checks.append(verdict(8, "runtime < 30s", elapsed < 30, f"{elapsed:.1f}s"))
    assert all(checks)


# 9. Stochastic line search under interpolation

def test_sgd_interpolation(verdict):
    start = time.perf_counter()
    cfg = untouched(load_experiment(CONFIGS / "sgd_sls.yaml"))
    eps = cfg.optimizer.eps_target
    hits, details = 0, []
    for seed in range(5):
        res = run_experiment(cfg.model_copy(update={"run": cfg.run.model_copy(update={"seed": seed})}), write=False)
        budget = theory_bound("sgd-logistic", c=cfg.optimizer.c, gamma=res.summary["constants"]["realized_margin"], eps=eps)
        reached = first_below(res.trace, 4 * eps)
        ok = res.trace.best_f <= 4 * eps and reached is not None and reached <= budget
        hits += ok
        details.append(f"seed {seed}: best {res.trace.best_f:.3g} at {reached}")
    elapsed = time.perf_counter() - start
    checks = [
        verdict(9, "best f <= 4 eps within budget for >= 4 of 5 seeds", hits >= 4,
                f"{hits}/5, budget {budget:.3g}; " + "; ".join(details)),
        verdict(9, "runtime < 60s", elapsed < 60, f"{elapsed:.1f}s"),
    ]
    assert all(checks)


# 10. Distance to a scaled max-margin point

def test_distance_contraction(verdict):
    data, spec = gen_separable_logistic(200, 20, 0.1, 0)
    obj = Logistic(data)
    eps = 1e-12
    u = math.log(1.0 / eps) / spec.realized_margin * spec.u_star
    trace = run_gd_ls(obj, np.zeros(20), LineSearchConfig(c=0.75), RunConfig(max_iters=2000, record_iterates=True))
    dist = np.array([np.linalg.norm(theta - u) for theta in trace.iterates])
    worst = float(np.max(np.diff(dist)))
    ok = verdict(10, "||theta_t - u|| non-increasing", worst <= 1e-10,
                 f"{dist.size} iterates, f(u) {obj.value(u):.3g}, final f {trace.final_f:.3g}, max increase {worst:.3g}")
    assert ok


# 11. Derivative checks

def test_gradient_and_hvp_suites(families, verdict):
    start = time.perf_counter()
    worst_fd, worst_sym = {}, {}
    for name, obj in families.items():
        rng = np.random.default_rng(11)
        pts = sample_ball(obj.dim, 100, 3.0, rng)
        tol = 1e-9 if name == "least-squares" else 1e-5
        fd = max(fd_gradient_check(obj, p) for p in pts)
        sym = max(hvp_asymmetry(obj, p, rng.standard_normal(obj.dim), rng.standard_normal(obj.dim)) for p in pts)
        worst_fd[name], worst_sym[name] = (fd, tol), sym
    elapsed = time.perf_counter() - start
    fd_ok = all(fd <= tol for fd, tol in worst_fd.values())
    sym_ok = all(s <= 1e-8 for s in worst_sym.values())
    checks = [
        verdict(11, "finite-difference gradient", fd_ok, ", ".join(f"{k} {v[0]:.2g}" for k, v in worst_fd.items())),
        verdict(11, "HVP symmetry <= 1e-8", sym_ok, ", ".join(f"{k} {v:.2g}" for k, v in worst_sym.items())),
        verdict(11, "runtime < 30s", elapsed < 30, f"{elapsed:.1f}s"),
    ]
    assert all(checks)
