"""Command-line entry point: gen, run, batch, certify, bound, compare.

Exit codes: 0 success, 1 run failure, 2 invalid input, 3 failed assertion.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import TypeAdapter, ValidationError

from .. import certify
from ..errors import ConfigError
from ..problems import gen_bandit, gen_glm_realizable, gen_mdp, gen_separable_logistic, write_libsvm
from .bounds import theory_bound
from .config import Problem, _problems, load_batch, load_experiment, parse_override
from .report import compare_report
from .runner import build_problem, run_experiment
from .traces import read_trace_csv

EXIT_OK, EXIT_RUN, EXIT_INVALID, EXIT_ASSERT = 0, 1, 2, 3

log = logging.getLogger("gdls")


def _overrides(items) -> list:
    return [parse_override(s) for s in items or ()]


def _problem_block(kind: str, overrides: list):
    doc = {"kind": kind}
    for key, value in overrides:
        doc[key] = value
    try:
        return TypeAdapter(Problem).validate_python(doc)
    except ValidationError as err:
        raise ConfigError(_problems(err, "problem")) from None


def cmd_gen(args) -> int:
    block = _problem_block(args.kind, _overrides(args.set))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if block.kind in ("logistic-separable", "exponential-separable"):
        data, spec = gen_separable_logistic(block.n, block.d, block.gamma, block.seed)
        write_libsvm(data, out)
        print(f"wrote {data.n} samples, d={data.d}, realized margin {spec.realized_margin:.6g} to {out}")
    elif block.kind == "glm":
        data, theta_star = gen_glm_realizable(block.n, block.d, block.theta_star_norm, block.seed)
        with open(out, "wb") as fh:
            np.savez(fh, features=data.features, labels=data.labels, theta_star=theta_star)
        print(f"wrote GLM instance n={data.n}, d={data.d} to {out}")
    elif block.kind == "bandit":
        inst = gen_bandit(block.K, block.seed, block.gap)
        out.write_text(json.dumps({"rewards": inst.rewards.tolist()}, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {inst.K}-armed bandit to {out}")
    elif block.kind == "mdp":
        inst = gen_mdp(block.S, block.A, block.gamma, block.seed)
        with open(out, "wb") as fh:
            np.savez(fh, P=inst.P, r=inst.r, rho=inst.rho, gamma=inst.gamma)
        print(f"wrote MDP S={inst.S}, A={inst.A} to {out}")
    else:
        raise ConfigError([("problem.kind", f"{block.kind} instances are read, not generated")])
    return EXIT_OK


def _print_summary(s: dict) -> None:
    rate = s["rate_fit"].get("kind", "n/a")
    print(f"{s['name']}: {s['terminal_reason']} after {s['iterations']} iterations, "
          f"f={s['final_f']}, fevals={s['fevals']}, rate={rate}")
    if s["error"]:
        print(f"  error: {s['error']}")


def cmd_run(args) -> int:
    ov = _overrides(args.set)
    if args.trace:
        ov.append(("output.trace", args.trace))
    if args.summary:
        ov.append(("output.summary", args.summary))
    cfg = load_experiment(args.config, ov)
    res = run_experiment(cfg)
    _print_summary(res.summary)
    return EXIT_RUN if res.summary["error"] else EXIT_OK


def _batch_job(cfg):
    res = run_experiment(cfg)
    return res.trace, res.summary


def cmd_batch(args) -> int:
    batch, exps = load_batch(args.config)
    if args.out_dir:
        out = Path(args.out_dir)
        exps = [
            e.model_copy(update={"output": e.output.model_copy(update={
                "trace": e.output.trace or str(out / f"{e.name}.csv"),
                "summary": e.output.summary or str(out / f"{e.name}.json"),
            })})
            for e in exps
        ]
    paths = [p for e in exps for p in (e.output.trace, e.output.summary) if p]
    if len(paths) != len(set(paths)):
        raise ConfigError([("experiments", "output paths must be unique per experiment")])
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_job, exps))
    else:
        results = [_batch_job(e) for e in exps]
    failed = False
    for _, s in results:
        _print_summary(s)
        failed |= bool(s["error"])
    if batch.report is not None:
        traces = [t for t, _ in results]
        bounds = {b.experiment: (b.value, b.eps) for b in batch.report.bounds}
        rep = compare_report(traces, [e.name for e in exps], bounds or None, path=batch.report.path)
        print(f"report written to {batch.report.path}")
        if not rep.ok:
            for c in rep.checks:
                if not c.holds:
                    print(f"bound violated: {c.label} observed {c.observed} > {c.bound:.6g}")
            return EXIT_ASSERT
    return EXIT_RUN if failed else EXIT_OK


def cmd_certify(args) -> int:
    cfg = load_experiment(args.config, _overrides(args.set))
    obj = build_problem(cfg.problem).objective
    prof = obj.profile()
    if args.scale:
        factors = dict(parse_override(s) for s in args.scale)
        try:
            prof = prof.scaled(**{k: float(v) for k, v in factors.items()})
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError([("--scale", str(exc))]) from None
    reports = []
    if "grad" in args.checks:
        reports.append(certify.check_grad_bound(obj, args.samples, args.radius, args.seed, prof))
    if "hessian" in args.checks:
        reports.append(certify.check_hessian_bound(obj, args.samples, args.radius, args.seed, prof))
    if "descent" in args.checks:
        reports.append(certify.check_descent_inequality(obj, args.samples, args.seed, args.radius, prof))
    ok = True
    for rep in reports:
        s = rep.summary()
        ok &= s["passed"]
        print(f"{s['name']}: {'PASS' if s['passed'] else 'FAIL'} "
              f"({s['checks_run']} checks, {s['violations']} violations, max slack {s['max_violation']:.3g}, "
              f"{s['inconclusive']} inconclusive)")
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_bound(args) -> int:
    consts = {}
    for item in args.constants:
        key, value = parse_override(item)
        try:
            consts[key] = float(value)
        except (TypeError, ValueError):
            raise ConfigError([(key, f"not a number: {value!r}")]) from None
    try:
        print(f"{theory_bound(args.setting, **consts):.17g}")
    except ValueError as exc:
        raise ConfigError([(args.setting, str(exc))]) from None
    return EXIT_OK


def _load_trace(path: str):
    p = Path(path)
    if p.suffix == ".json":
        s = json.loads(p.read_text(encoding="utf-8"))
        if not s.get("trace"):
            raise ConfigError([(path, "summary does not reference a trace file")])
        trace = read_trace_csv(s["trace"])
        trace.terminal_reason = s.get("terminal_reason", trace.terminal_reason)
        trace.meta.update(name=s.get("name"), problem_key=s.get("problem_key"))
        return trace
    trace = read_trace_csv(p)
    trace.meta["name"] = p.stem
    return trace


def _parse_bound(text: str):
    label, sep, rest = text.partition("=")
    if not sep:
        raise ConfigError([("--bound", f"expected label=value[@eps], got {text!r}")])
    value, _, eps = rest.partition("@")
    try:
        return label, (float(value), float(eps) if eps else None)
    except ValueError:
        raise ConfigError([("--bound", f"not a number in {text!r}")]) from None


def cmd_compare(args) -> int:
    try:
        traces = [_load_trace(p) for p in args.inputs]
    except (OSError, ValueError) as exc:
        raise ConfigError([("inputs", str(exc))]) from None
    labels = args.labels.split(",") if args.labels else None
    bounds = dict(_parse_bound(b) for b in args.bound or ())
    try:
        rep = compare_report(traces, labels, bounds or None, path=args.out)
    except ValueError as exc:
        raise ConfigError([("inputs", str(exc))]) from None
    if args.out is None:
        print(rep.text, end="")
    return EXIT_OK if rep.ok else EXIT_ASSERT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdls", description="GD with Armijo line-search experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("kind", choices=["logistic-separable", "exponential-separable", "glm", "bandit", "mdp"])
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="generator parameter, e.g. n=200")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--set", action="append", metavar="PATH=VALUE", help="override, e.g. optimizer.c=0.75")
    r.add_argument("--trace", help="CSV trace path (overrides output.trace)")
    r.add_argument("--summary", help="JSON summary path (overrides output.summary)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="run several experiments and an optional report")
    b.add_argument("--config", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out-dir", help="default location for traces and summaries")
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("certify", help="check the smoothness assumptions by sampling")
    c.add_argument("--config", required=True)
    c.add_argument("--set", action="append", metavar="PATH=VALUE")
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--radius", type=float, default=10.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--scale", action="append", metavar="CONST=FACTOR", help="scale a profile constant, e.g. nu=0.5")
    c.add_argument("--checks", default="grad,hessian,descent")
    c.set_defaults(func=cmd_certify)

    bd = sub.add_parser("bound", help="evaluate a closed-form iteration bound")
    bd.add_argument("setting")
    bd.add_argument("constants", nargs="*", metavar="NAME=VALUE")
    bd.set_defaults(func=cmd_bound)

    cp = sub.add_parser("compare", help="compare traces (CSV or run summaries)")
    cp.add_argument("inputs", nargs="+")
    cp.add_argument("--labels", help="comma-separated labels")
    cp.add_argument("--bound", action="append", metavar="LABEL=VALUE[@EPS]")
    cp.add_argument("--out", help="report path; printed when omitted")
    cp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
