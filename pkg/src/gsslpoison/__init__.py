"""Data poisoning attacks against graph-based semi-supervised learning."""

from .data import Dataset, Task
from .graph import KernelGraph, build_kernel_graph
from .propagation import PropagationOperator, error_rate, predict, propagation_operator, rmse
from .trustregion import (
    TrustRegionConfig,
    TrustRegionProblem,
    TrustRegionSolution,
    oracle_tr,
    phase1_bound,
    solve_tr,
)

__all__ = [
    "Dataset",
    "Task",
    "KernelGraph",
    "build_kernel_graph",
    "PropagationOperator",
    "propagation_operator",
    "predict",
    "rmse",
    "error_rate",
    "TrustRegionProblem",
    "TrustRegionConfig",
    "TrustRegionSolution",
    "solve_tr",
    "oracle_tr",
    "phase1_bound",
]

__version__ = "0.1.0"
