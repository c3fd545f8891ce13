"""Comparison attacks: random noise, degree-weighted and PageRank-weighted
perturbations, each for the l2 (regression) and flip (classification) budgets."""

from __future__ import annotations

import numpy as np

from .attack_classification import FlipVector
from .attack_regression import LabelPerturbation, _perturbation
from .data import Task
from .graph import KernelGraph, pagerank_scores
from .propagation import PropagationOperator, squash_sign


def baseline_random(task: Task, n_l: int, budget, seed: int):
    """Gaussian direction scaled to the l2 budget, or c_max uniformly chosen
    flips."""
    rng = np.random.default_rng(seed)
    if task is Task.REGRESSION:
        d_max = float(budget)
        if d_max < 0:
            raise ValueError("d_max must be nonnegative")
        if d_max == 0.0:
            return _perturbation(np.zeros(n_l), 0.0, 0.0)
        eps = rng.standard_normal(n_l)
        delta = d_max * eps / np.linalg.norm(eps)
        return _perturbation(delta, d_max, np.nan)
    c_max = int(budget)
    if not 0 <= c_max <= n_l:
        raise ValueError(f"c_max={c_max} outside [0, {n_l}]")
    picks = rng.choice(n_l, size=c_max, replace=False)
    return FlipVector.from_indices(n_l, picks)


def baseline_degree(task, graph: KernelGraph, op: PropagationOperator, y_l, target, budget):
    scores = graph.D[: op.n_l]
    return _centrality_attack(task, scores, op, y_l, target, budget)


def baseline_pagerank(
    task, graph: KernelGraph, op: PropagationOperator, y_l, target, budget, damping: float = 0.85
):
    scores = pagerank_scores(graph, damping=damping)[: op.n_l]
    return _centrality_attack(task, scores, op, y_l, target, budget)


def _centrality_attack(task, scores, op, y_l, target, budget):
    """Magnitudes proportional to the centrality scores of the labeled nodes;
    regression signs follow the gradient of the victim loss at delta = 0,
    classification flips the top-c_max scores."""
    if task is Task.REGRESSION:
        d_max = float(budget)
        if d_max < 0:
            raise ValueError("d_max must be nonnegative")
        if d_max == 0.0:
            return _perturbation(np.zeros(op.n_l), 0.0, 0.0)
        weights = np.sqrt(scores**2 / np.sum(scores**2))
        grad = op.K.T @ (op.K @ np.asarray(y_l, dtype=float) - np.asarray(target, dtype=float))
        delta = d_max * weights * squash_sign(grad)
        return _perturbation(delta, d_max, np.nan)
    c_max = int(budget)
    if not 0 <= c_max <= op.n_l:
        raise ValueError(f"c_max={c_max} outside [0, {op.n_l}]")
    order = np.argsort(-scores, kind="stable")
    return FlipVector.from_indices(op.n_l, order[:c_max])
