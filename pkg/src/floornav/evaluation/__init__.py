"""Metrics, baseline policies, and the benchmark runner."""

from .benchmark import AblationSpec, effective_plan, parse_plan_mode, render_table, run_benchmark, run_episode
from .metrics import (
    MetricsSummary,
    navigation_error,
    oracle_success,
    shortest_path_length,
    spl,
    success,
    summarize,
)
from .policies import (
    DeadReckoningPolicy,
    ExternalPolicy,
    OracleClosedLoopPolicy,
    PolicyError,
    PolicySpec,
    RandomPolicy,
    make_policy,
)

__all__ = [
    "AblationSpec",
    "DeadReckoningPolicy",
    "ExternalPolicy",
    "MetricsSummary",
    "OracleClosedLoopPolicy",
    "PolicyError",
    "PolicySpec",
    "RandomPolicy",
    "effective_plan",
    "make_policy",
    "navigation_error",
    "oracle_success",
    "parse_plan_mode",
    "render_table",
    "run_benchmark",
    "run_episode",
    "shortest_path_length",
    "spl",
    "success",
    "summarize",
]
