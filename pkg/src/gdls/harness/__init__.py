"""Experiment runner, trace files, rate fits, bound calculators and reports."""

from .bounds import SETTINGS, theory_bound
from .config import BatchConfig, ExperimentConfig, load_batch, load_experiment, validate_experiment
from .rates import RateFit, fit_rate
from .report import BoundCheck, Report, compare_report
from .runner import RunResult, build_problem, run_experiment
from .traces import COLUMNS, read_trace_csv, write_trace_csv

__all__ = [
    "BatchConfig",
    "BoundCheck",
    "COLUMNS",
    "ExperimentConfig",
    "RateFit",
    "Report",
    "RunResult",
    "SETTINGS",
    "build_problem",
    "compare_report",
    "fit_rate",
    "load_batch",
    "load_experiment",
    "read_trace_csv",
    "run_experiment",
    "theory_bound",
    "validate_experiment",
    "write_trace_csv",
]
