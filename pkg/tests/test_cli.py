import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gdls.harness.cli import main
from gdls.problems import parse_libsvm

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def bandit_yaml(tmp_path):
    return write(tmp_path / "bandit.yaml", (
        "version: 1\nname: b\nproblem: {kind: bandit, K: 5, seed: 1}\n"
        "optimizer: {kind: gd-ls, eta_max: 1.0e+16, max_backtracks: 400}\n"
        "run: {max_iters: 500, grad_tol: 0.0, f_target: 1.0e-10}\n"
    ))


def test_run_writes_trace_and_summary(tmp_path, bandit_yaml, capsys):
    trace, summary = tmp_path / "t.csv", tmp_path / "s.json"
    assert main(["run", "--config", str(bandit_yaml), "--trace", str(trace), "--summary", str(summary)]) == 0
    s = json.loads(summary.read_text())
    assert s["trace"] == str(trace) and trace.exists()
    assert s["terminal_reason"] == "f_target"
    assert "f_target after" in capsys.readouterr().out


def test_run_override(tmp_path, bandit_yaml):
    summary = tmp_path / "s.json"
    assert main(["run", "--config", str(bandit_yaml), "--set", "run.max_iters=3", "--summary", str(summary)]) == 0
    assert json.loads(summary.read_text())["iterations"] == 3


def test_run_invalid_config_exits_2(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "version: 1\nproblem: {kind: bandit}\noptimizer: {kind: adam}\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert "error: optimizer.kind:" in capsys.readouterr().err


def test_run_failure_exits_1(tmp_path):
    cfg = write(tmp_path / "c.yaml", (
        "version: 1\nproblem: {kind: logistic-separable, n: 20, d: 3}\n"
        "optimizer: {kind: gd-ls, eta_max: 1.0e+30, max_backtracks: 0}\n"
    ))
    assert main(["run", "--config", str(cfg)]) == 1


def test_batch_report_and_bound_violation(tmp_path, capsys):
    body = (
        "version: 1\nexperiments:\n"
        "  - {name: ls, problem: {kind: bandit, K: 4}, optimizer: {kind: gd-ls, eta_max: 1.0e+16, max_backtracks: 400},"
        " run: {max_iters: 200, grad_tol: 0.0, f_target: 1.0e-10}}\n"
        "  - {name: const, problem: {kind: bandit, K: 4}, optimizer: {kind: gd-const}, run: {max_iters: 50}}\n"
        f"report: {{path: {tmp_path / 'r.md'}, bounds: [{{experiment: ls, value: BOUND, eps: 1.0e-8}}]}}\n"
    )
    ok = write(tmp_path / "ok.yaml", body.replace("BOUND", "1.0e+6"))
    assert main(["batch", "--config", str(ok), "--out-dir", str(tmp_path / "runs"), "--jobs", "2"]) == 0
    assert (tmp_path / "runs" / "ls.csv").exists() and (tmp_path / "runs" / "const.json").exists()
    assert "| ls | 1e-08 |" in (tmp_path / "r.md").read_text()

    bad = write(tmp_path / "bad.yaml", body.replace("BOUND", "2"))
    assert main(["batch", "--config", str(bad)]) == 3
    assert "bound violated: ls" in capsys.readouterr().out


def test_batch_rejects_shared_outputs(tmp_path):
    cfg = write(tmp_path / "b.yaml", (
        "version: 1\nexperiments:\n"
        "  - {name: a, problem: {kind: bandit}, optimizer: {kind: gd-const}, output: {trace: x.csv}}\n"
        "  - {name: b, problem: {kind: bandit}, optimizer: {kind: gd-const}, output: {trace: x.csv}}\n"
    ))
    assert main(["batch", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("kind,suffix", [
    ("logistic-separable", ".svm"), ("exponential-separable", ".svm"),
    ("glm", ".npz"), ("bandit", ".json"), ("mdp", ".npz"),
])
def test_gen(tmp_path, kind, suffix):
    out = tmp_path / f"inst{suffix}"
    assert main(["gen", kind, "--set", "seed=3", "--out", str(out)]) == 0
    if suffix == ".svm":
        data = parse_libsvm(out, normalize_rows=False)
        assert data.n == 200 and data.d <= 20
        assert np.all(np.linalg.norm(data.features, axis=1) <= 1 + 1e-12)
    elif suffix == ".json":
        assert len(json.loads(out.read_text())["rewards"]) == 10
    else:
        assert len(np.load(out).files) >= 3


def test_gen_bad_parameter(tmp_path):
    assert main(["gen", "bandit", "--set", "K=1", "--out", str(tmp_path / "x.json")]) == 2


def test_bound(capsys):
    assert main(["bound", "bandit", "K=10", "f0=1", f"eps={math.exp(-1)!r}"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2_160_000)


def test_bound_errors(capsys):
    assert main(["bound", "bandit", "K=10"]) == 2
    assert "missing constant" in capsys.readouterr().err
    assert main(["bound", "bandit", "K=ten", "f0=1", "eps=0.1"]) == 2


def test_compare_summaries(tmp_path, bandit_yaml, capsys):
    for name, extra in (("ls", []), ("const", ["--set", "optimizer={kind: gd-const}"])):
        main(["run", "--config", str(bandit_yaml), *extra, "--trace", str(tmp_path / f"{name}.csv"),
              "--summary", str(tmp_path / f"{name}.json")])
    capsys.readouterr()
    args = ["compare", str(tmp_path / "ls.json"), str(tmp_path / "const.json"), "--labels", "ls,const"]
    assert main(args + ["--bound", "ls=1e6@1e-8"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# Trace comparison") and "## Rate fits" in out
    assert main(args + ["--bound", "ls=1@1e-8"]) == 3


def test_compare_rejects_different_problems(tmp_path, bandit_yaml):
    main(["run", "--config", str(bandit_yaml), "--trace", str(tmp_path / "a.csv"), "--summary", str(tmp_path / "a.json")])
    main(["run", "--config", str(bandit_yaml), "--set", "problem.seed=2", "--trace", str(tmp_path / "b.csv"),
          "--summary", str(tmp_path / "b.json")])
    assert main(["compare", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == 2
    # Bare CSVs carry no problem identity.
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path / "r.md")]) == 0


def test_certify(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "version: 1\nproblem: {kind: logistic-separable, n: 30, d: 3}\noptimizer: {kind: gd-ls}\n")
    assert main(["certify", "--config", str(cfg), "--samples", "100", "--radius", "5"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3
    assert main(["certify", "--config", str(cfg), "--samples", "200", "--scale", "nu=0.01", "--checks", "grad"]) == 3
    assert main(["certify", "--config", str(cfg), "--scale", "bogus=2"]) == 2


def test_shipped_configs_validate():
    from gdls.harness import load_batch, load_experiment

    for path in sorted(CONFIGS.glob("*.yaml")):
        doc = path.read_text()
        if "experiments:" in doc:
            load_batch(path)
        else:
            load_experiment(path)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gdls", "bound", "polyak", "c=0.75", "nu=8", "R=4", "f_u=0", "eps=1e-3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(384.0)
