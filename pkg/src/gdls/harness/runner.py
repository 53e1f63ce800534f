"""Build a problem from a config, run the optimizer, write trace and summary."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, EvaluationRangeError, LineSearchError, StepSizeError
from ..linesearch import LineSearchConfig
from ..objectives import GLM, Bandit, Exponential, Logistic, Objective, TabularMDP
from ..optimizers import (
    RunConfig,
    Trace,
    run_gd_constant,
    run_gd_ls,
    run_gd_polyak,
    run_normalized_gd,
    run_sgd_sls,
)
from ..problems import gen_bandit, gen_glm_realizable, gen_mdp, gen_separable_logistic, parse_libsvm
from .config import ExperimentConfig
from .rates import fit_rate
from .traces import write_trace_csv


@dataclass
class BuiltProblem:
    objective: Objective
    constants: dict = field(default_factory=dict)
    # Max-margin direction for separable data, used by the margin comparator.
    u_star: np.ndarray | None = None


@dataclass
class RunResult:
    trace: Trace
    summary: dict
    problem: BuiltProblem


def build_problem(block) -> BuiltProblem:
    kind = block.kind
    if kind in ("logistic-separable", "exponential-separable"):
        try:
            data, spec = gen_separable_logistic(block.n, block.d, block.gamma, block.seed)
        except RuntimeError as exc:
            raise ConfigError([("problem.gamma", str(exc))]) from None
        cls = Logistic if kind == "logistic-separable" else Exponential
        return BuiltProblem(cls(data), {"realized_margin": spec.realized_margin}, spec.u_star)
    if kind == "glm":
        data, theta_star = gen_glm_realizable(block.n, block.d, block.theta_star_norm, block.seed)
        return BuiltProblem(GLM(data, theta_star, constants=block.constants))
    if kind == "bandit":
        inst = gen_bandit(block.K, block.seed, block.gap)
        return BuiltProblem(Bandit(inst), {"K": inst.K, "best_arm": inst.a_star})
    if kind == "mdp":
        obj = TabularMDP(gen_mdp(block.S, block.A, block.gamma, block.seed))
        return BuiltProblem(obj, {"kappa": obj.mismatch_constant(), "optimal_value": obj.value_star})
    if kind == "libsvm":
        try:
            data = parse_libsvm(block.path, normalize_rows=block.normalize_rows)
        except OSError as exc:
            raise ConfigError([("problem.path", f"cannot read {block.path}: {exc.strerror}")]) from None
        except ValueError as exc:
            raise ConfigError([("problem.path", str(exc))]) from None
        cls = Logistic if block.loss == "logistic" else Exponential
        return BuiltProblem(cls(data), {"n": data.n, "d": data.d})
    raise ConfigError([("problem.kind", f"unknown problem kind {kind!r}")])


def _ls_config(opt, **override) -> LineSearchConfig:
    fields = ("c", "eta_max", "beta", "max_backtracks", "exact_refine", "refine_rel_tol", "warm_start", "reject_overflow")
    vals = {k: getattr(opt, k) for k in fields}
    vals.update(override)
    return LineSearchConfig(**vals)


def _comparator(opt, built: BuiltProblem, constants: dict) -> float:
    comp = opt.comparator
    if comp.kind == "value":
        if comp.value is None:
            raise ConfigError([("optimizer.comparator.value", "required for a value comparator")])
        return comp.value
    if comp.eps is None:
        raise ConfigError([("optimizer.comparator.eps", f"required for a {comp.kind} comparator")])
    obj = built.objective
    if built.u_star is not None:
        # u = beta u* with beta = ln(1/eps) / margin keeps f(u) <= eps.
        scale = math.log(1.0 / comp.eps) / constants["realized_margin"]
        f_u = obj.value(scale * built.u_star)
        constants.update(comparator_point_value=f_u, comparator_scale=scale, alpha=f_u / comp.eps)
    elif comp.kind == "margin":
        raise ConfigError([("optimizer.comparator.kind", "a margin comparator needs a separable problem")])
    if comp.kind == "margin":
        return f_u
    return comp.eps


def _profile_constants(obj: Objective, c: float | None) -> dict:
    prof = obj.profile()
    out = {"L0": prof.L0, "L1": prof.L1, "nu": prof.nu, "omega": prof.omega}
    if prof.uniform_L is not None:
        out["uniform_L"] = prof.uniform_L
    if c is not None:
        out["lambda0"], out["lambda1"] = prof.line_search_constants(c)
    return out


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


def execute(cfg: ExperimentConfig, built: BuiltProblem) -> tuple[Trace, dict]:
    """Run the configured optimizer; returns the trace and realized constants."""
    obj = built.objective
    opt = cfg.optimizer
    r = cfg.run
    run_cfg = RunConfig(max_iters=r.max_iters, grad_tol=r.grad_tol, f_target=r.f_target, seed=r.seed,
                        record_extras=r.record_extras, eval_every=r.eval_every)
    theta0 = np.zeros(obj.dim)
    constants = dict(built.constants)
    constants.update(_profile_constants(obj, getattr(opt, "c", None)))
    constants["f0"] = obj.value(theta0)
    if opt.kind == "gd-ls":
        ls = _ls_config(opt)
        constants["eta_max"] = ls.eta_max
        trace = run_gd_ls(obj, theta0, ls, run_cfg)
    elif opt.kind == "sgd-sls":
        ls = _ls_config(opt)
        if opt.eps_target is not None:
            eta_max = (2.0 * opt.c - 1.0) / (opt.c * constants["lambda1"] * opt.eps_target)
            if not eta_max > 0:
                raise ConfigError([("optimizer.eps_target", "needs c > 1/2 and lambda1 > 0")])
            ls = _ls_config(opt, eta_max=eta_max)
        constants["eta_max"] = ls.eta_max
        trace = run_sgd_sls(obj, theta0, ls, run_cfg)
    elif opt.kind == "gd-const":
        trace = run_gd_constant(obj, theta0, opt.step, run_cfg)
        constants["step"] = trace.meta["step"]
    elif opt.kind == "gd-polyak":
        comparator = _comparator(opt, built, constants)
        constants["comparator"] = comparator
        trace = run_gd_polyak(obj, theta0, opt.c, comparator, run_cfg)
    elif opt.kind == "normalized-gd":
        constants["step"] = opt.step
        trace = run_normalized_gd(obj, theta0, opt.step, run_cfg)
    else:
        raise ConfigError([("optimizer.kind", f"unknown optimizer kind {opt.kind!r}")])
    return trace, constants


def summarize(cfg: ExperimentConfig, trace: Trace, constants: dict) -> dict:
    try:
        fit = fit_rate(trace)
        rate = {"kind": fit.kind, "slope": fit.slope, "r2": fit.r2, "tail_fraction": fit.tail_fraction,
                "sublinear_model": fit.sublinear_model}
    except ValueError as exc:
        rate = {"error": str(exc)}
    steps = trace.steps
    steps = steps[steps > 0]
    return _finite({
        "name": cfg.name,
        "problem_key": cfg.problem_key(),
        "problem": cfg.problem.model_dump(),
        "optimizer": cfg.optimizer.model_dump(),
        "terminal_reason": trace.terminal_reason,
        "error": trace.error,
        "iterations": trace.iterations,
        "final_f": trace.final_f,
        "best_f": trace.best_f,
        "fevals": trace.rows[-1].fevals_cum if trace.rows else 0,
        "rate_fit": rate,
        "steps": {"first": float(steps[0]), "min": float(steps.min()), "max": float(steps.max())} if steps.size else None,
        "constants": constants,
        "trace": cfg.output.trace,
    })


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Build, run and (optionally) write the CSV trace and JSON summary.

    Line-search and step-size failures end the run; the partial trace is kept
    and the error goes into the summary.
    """
    built = build_problem(cfg.problem)
    try:
        trace, constants = execute(cfg, built)
    except (LineSearchError, StepSizeError) as exc:
        trace = exc.trace if exc.trace is not None else Trace(terminal_reason="error")
        trace.terminal_reason = "error"
        trace.error = trace.error or str(exc)
        constants = dict(built.constants)
    except EvaluationRangeError as exc:
        trace = Trace(terminal_reason="error", error=str(exc))
        constants = dict(built.constants)
    trace.meta.update(name=cfg.name, problem_key=cfg.problem_key())
    summary = summarize(cfg, trace, constants)
    if write:
        if cfg.output.trace:
            write_trace_csv(trace, cfg.output.trace)
        if cfg.output.summary:
            p = Path(cfg.output.summary)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunResult(trace, summary, built)
