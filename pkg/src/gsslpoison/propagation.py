"""Label propagation: the linear operator K mapping labeled labels to
unlabeled predictions, plus evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .graph import KernelGraph

CONDITION_LIMIT = 1e12


def squash_sign(values: np.ndarray) -> np.ndarray:
    """Sign squeeze with the fixed tie rule sign(0) = +1."""
    return np.where(np.asarray(values, dtype=float) >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class PropagationOperator:
    """K = (D_uu - S_uu)^{-1} S_ul, row-stochastic up to roundoff."""

    K: np.ndarray
    gamma: float
    n_l: int
    n_u: int


def propagation_operator(g: KernelGraph, n_l: int) -> PropagationOperator:
    """Solve (D_uu - S_uu) K = S_ul for K (never forms an inverse).

    The unlabeled block is an M-matrix; it is factorized as SPD and a cheap
    power/inverse-power condition estimate guards against splits whose
    unlabeled subgraph is numerically disconnected from the labels.
    """
    n = g.n
    if not 1 <= n_l < n:
        raise ValueError(f"n_l={n_l} outside [1, {n})")
    S_uu = g.S[n_l:, n_l:]
    S_ul = g.S[n_l:, :n_l]
    M = np.diag(g.D[n_l:]) - S_uu
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "unlabeled subgraph disconnected from labels (singular system)"
        ) from exc
    if _condition_estimate(M, factor) > CONDITION_LIMIT:
        raise ValueError(
            "unlabeled subgraph disconnected from labels (condition estimate "
            f"above {CONDITION_LIMIT:.0e})"
        )
    K = cho_solve(factor, S_ul)
    return PropagationOperator(K=K, gamma=g.gamma, n_l=n_l, n_u=n - n_l)


def _condition_estimate(M: np.ndarray, factor, iters: int = 50) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(M.shape[0])
    for _ in range(iters):
        v = M @ v
        v /= np.linalg.norm(v)
    lam_max = float(v @ (M @ v))
    w = rng.standard_normal(M.shape[0])
    for _ in range(iters):
        w = cho_solve(factor, w)
        nw = np.linalg.norm(w)
        if nw == 0.0 or not np.isfinite(nw):
            return np.inf
        w /= nw
    lam_min = float(w @ (M @ w))
    if lam_min <= 0.0:
        return np.inf
    return lam_max / lam_min


def predict(op: PropagationOperator, y_l: np.ndarray, squash: str = "identity") -> np.ndarray:
    """g(K y_l) with g = identity or the sign squeeze."""
    y_l = np.asarray(y_l, dtype=float)
    if y_l.shape != (op.n_l,):
        raise ValueError(f"y_l must have length {op.n_l}")
    raw = op.K @ y_l
    if squash == "identity":
        return raw
    if squash == "sign":
        return squash_sign(raw)
    raise ValueError(f"unknown squash {squash!r}")


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("pred and truth must be equal-length nonempty vectors")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def error_rate(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("pred and truth must be equal-length nonempty vectors")
    return float(np.mean(squash_sign(pred) != squash_sign(truth)))
