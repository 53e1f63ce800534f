"""Objective families with analytic values, gradients and Hessian-vector products."""

from .base import (
    Dataset,
    Evaluation,
    FiniteSum,
    Objective,
    SmoothnessProfile,
    as_param,
    descent_constants,
    power_iteration,
    zhang_to_nus,
)
from .linear import GLM, Exponential, LinearRegression, Logistic, Multiclass
from .policy import Bandit, MabInstance, MdpInstance, TabularMDP, softmax


def eval_linear_regression(data: Dataset, theta) -> Evaluation:
    return LinearRegression(data).evaluate(theta)


def eval_logistic(data: Dataset, theta) -> Evaluation:
    return Logistic(data).evaluate(theta)


def eval_exponential(data: Dataset, theta) -> Evaluation:
    return Exponential(data).evaluate(theta)


def eval_multiclass(data: Dataset, theta, n_classes: int | None = None) -> Evaluation:
    return Multiclass(data, n_classes).evaluate(theta)


def eval_glm(data: Dataset, theta) -> Evaluation:
    return GLM(data).evaluate(theta)


def eval_bandit(inst: MabInstance, theta) -> Evaluation:
    return Bandit(inst).evaluate(theta)


def eval_mdp(inst: MdpInstance, theta) -> Evaluation:
    return TabularMDP(inst).evaluate(theta)


def smoothness_profile(obj: Objective) -> SmoothnessProfile:
    return obj.profile()


def hvp(obj: Objective, theta, v):
    return obj.hvp(theta, v)


__all__ = [
    "Bandit",
    "Dataset",
    "Evaluation",
    "Exponential",
    "FiniteSum",
    "GLM",
    "LinearRegression",
    "Logistic",
    "MabInstance",
    "MdpInstance",
    "Multiclass",
    "Objective",
    "SmoothnessProfile",
    "TabularMDP",
    "as_param",
    "descent_constants",
    "eval_bandit",
    "eval_exponential",
    "eval_glm",
    "eval_linear_regression",
    "eval_logistic",
    "eval_mdp",
    "eval_multiclass",
    "hvp",
    "power_iteration",
    "smoothness_profile",
    "softmax",
    "zhang_to_nus",
]
