"""Experiment configuration: YAML documents validated with pydantic.

A document has `version: 1` and four blocks: problem, optimizer, run, output.
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# Problems

class LogisticSeparable(_Strict):
    kind: Literal["logistic-separable"]
    n: int = Field(200, ge=1)
    d: int = Field(20, ge=1)
    gamma: float = Field(0.1, gt=0, lt=1)
    seed: int = 0


class ExponentialSeparable(_Strict):
    kind: Literal["exponential-separable"]
    n: int = Field(200, ge=1)
    d: int = Field(20, ge=1)
    gamma: float = Field(0.1, gt=0, lt=1)
    seed: int = 0


class GlmProblem(_Strict):
    kind: Literal["glm"]
    n: int = Field(500, ge=1)
    d: int = Field(20, ge=1)
    theta_star_norm: float = Field(1.0, gt=0)
    seed: int = 0
    constants: Literal["simple", "refined"] = "simple"


class BanditProblem(_Strict):
    kind: Literal["bandit"]
    K: int = Field(10, ge=2)
    seed: int = 0
    gap: float | None = Field(None, gt=0, le=1)


class MdpProblem(_Strict):
    kind: Literal["mdp"]
    S: int = Field(4, ge=1)
    A: int = Field(3, ge=1)
    gamma: float = Field(0.9, ge=0, lt=1)
    seed: int = 0


class LibsvmProblem(_Strict):
    kind: Literal["libsvm"]
    path: str
    loss: Literal["logistic", "exponential"] = "logistic"
    normalize_rows: bool = True


Problem = Annotated[
    Union[LogisticSeparable, ExponentialSeparable, GlmProblem, BanditProblem, MdpProblem, LibsvmProblem],
    Field(discriminator="kind"),
]


# Optimizers

class _LineSearchFields(_Strict):
    c: float = Field(0.5, gt=0, lt=1)
    eta_max: float = Field(1e8, gt=0)
    beta: float = Field(0.9, gt=0, lt=1)
    max_backtracks: int = Field(200, ge=0)
    exact_refine: bool = False
    refine_rel_tol: float = Field(1e-3, gt=0, le=0.5)
    warm_start: bool = False
    reject_overflow: bool = True


class GdLs(_LineSearchFields):
    kind: Literal["gd-ls"]


class SgdSls(_LineSearchFields):
    kind: Literal["sgd-sls"]
    # When set, eta_max is replaced by (2c - 1) / (c lambda1 eps).
    eps_target: float | None = Field(None, gt=0)


class GdConst(_Strict):
    kind: Literal["gd-const"]
    step: float | None = Field(None, gt=0)


class Comparator(_Strict):
    kind: Literal["value", "margin", "eps"]
    value: float | None = Field(None, ge=0)
    eps: float | None = Field(None, gt=0, lt=1)


class GdPolyak(_Strict):
    kind: Literal["gd-polyak"]
    c: float = Field(0.75, gt=0.5, lt=1)
    comparator: Comparator


class NormalizedGd(_Strict):
    kind: Literal["normalized-gd"]
    step: float = Field(gt=0)


Optimizer = Annotated[Union[GdLs, SgdSls, GdConst, GdPolyak, NormalizedGd], Field(discriminator="kind")]


class RunBlock(_Strict):
    max_iters: int = Field(1000, ge=1)
    grad_tol: float = Field(1e-12, ge=0)
    f_target: float | None = None
    seed: int = 0
    record_extras: bool = False
    eval_every: int = Field(10, ge=1)


class OutputBlock(_Strict):
    trace: str | None = None
    summary: str | None = None
    report: str | None = None


class ExperimentConfig(_Strict):
    version: Literal[1]
    name: str = "experiment"
    problem: Problem
    optimizer: Optimizer
    run: RunBlock = RunBlock()
    output: OutputBlock = OutputBlock()

    def problem_key(self) -> str:
        """Stable identity of the problem block, used to match traces in reports."""
        blob = json.dumps(self.problem.model_dump(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class BoundSpec(_Strict):
    experiment: str
    value: float = Field(gt=0)
    eps: float | None = Field(None, gt=0)


class ReportBlock(_Strict):
    path: str
    bounds: list[BoundSpec] = []


class BatchConfig(_Strict):
    version: Literal[1]
    experiments: list[dict] = Field(min_length=1)
    report: ReportBlock | None = None


_TAGS = {
    "logistic-separable", "exponential-separable", "glm", "bandit", "mdp", "libsvm",
    "gd-ls", "sgd-sls", "gd-const", "gd-polyak", "normalized-gd",
}


def _problems(err: ValidationError, prefix: str = "") -> list[tuple[str, str]]:
    out = []
    for e in err.errors():
        # Tagged unions insert the tag as a path element; drop it for readability.
        loc = [str(p) for p in e["loc"] if p not in _TAGS]
        if e["type"] in ("union_tag_invalid", "union_tag_not_found"):
            loc.append("kind")
        path = ".".join(filter(None, [prefix, *loc])) or "<root>"
        out.append((path, e["msg"]))
    return out


def set_path(doc: dict, dotted: str, value) -> None:
    """Assign `value` at a dotted path such as optimizer.c, creating blocks."""
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        nxt = cur.get(k)
        if nxt is None:
            nxt = cur[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError([(dotted, f"{k} is not a block")])
        cur = nxt
    cur[keys[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    """`key.path=value` with the value parsed as a YAML scalar."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError([(text, "override must look like key.path=value")])
    return key.strip(), yaml.safe_load(raw)


def load_document(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read: {exc.strerror}")]) from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([(str(path), f"not valid YAML: {exc}")]) from None
    if not isinstance(doc, dict):
        raise ConfigError([(str(path), "top level must be a mapping")])
    return doc


def validate_experiment(doc: dict, overrides=(), prefix: str = "") -> ExperimentConfig:
    doc = copy.deepcopy(doc)
    for key, value in overrides:
        set_path(doc, key, value)
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(_problems(err, prefix)) from None


def load_experiment(path, overrides=()) -> ExperimentConfig:
    return validate_experiment(load_document(path), overrides)


def load_batch(path) -> tuple[BatchConfig, list[ExperimentConfig]]:
    doc = load_document(path)
    try:
        batch = BatchConfig.model_validate(doc)
    except ValidationError as err:
        raise ConfigError(_problems(err)) from None
    exps, problems = [], []
    for i, entry in enumerate(batch.experiments):
        entry = {"version": 1, **entry}
        try:
            exps.append(validate_experiment(entry, prefix=f"experiments.{i}"))
        except ConfigError as exc:
            problems += exc.problems
    names = [e.name for e in exps]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        problems.append(("experiments", f"duplicate experiment names: {', '.join(dupes)}"))
    if batch.report is not None:
        for j, b in enumerate(batch.report.bounds):
            if b.experiment not in names:
                problems.append((f"report.bounds.{j}.experiment", f"no experiment named {b.experiment!r}"))
    if problems:
        raise ConfigError(problems)
    return batch, exps
