"""Gaussian-kernel graph construction plus degree and PageRank centralities."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericError


@dataclass(frozen=True)
class KernelGraph:
    """Similarity matrix S_ij = exp(-gamma ||x_i - x_j||^2) with degrees D."""

    S: np.ndarray
    D: np.ndarray
    gamma: float

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.D) - self.S


def build_kernel_graph(X: np.ndarray, gamma: float) -> KernelGraph:
    """Dense Gaussian-kernel graph; symmetric by construction (upper triangle
    computed once and mirrored), unit diagonal."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    upper = np.triu(np.exp(-gamma * d2), k=1)
    S = upper + upper.T + np.eye(n)
    return KernelGraph(S=S, D=S.sum(axis=1), gamma=float(gamma))


def cross_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Rectangular block exp(-gamma ||a_i - b_j||^2) between two point sets."""
    sa = np.sum(A * A, axis=1)
    sb = np.sum(B * B, axis=1)
    d2 = sa[:, None] + sb[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def degree_scores(g: KernelGraph) -> np.ndarray:
    return g.D.copy()


def pagerank_scores(
    g: KernelGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 10000
) -> np.ndarray:
    """Power iteration for p = (1-damping)/n + damping P^T p with P the
    row-normalized similarity matrix.  Stops on ||p_next - p||_1 <= tol."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    n = g.n
    P = g.S / g.D[:, None]
    p = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    for _ in range(max_iter):
        p_next = base + damping * (P.T @ p)
        residual = np.abs(p_next - p).sum()
        p = p_next
        if residual <= tol:
            return p
    raise NumericError(f"pagerank did not converge: last L1 residual {residual:.3e}")


def dump_graph_csv(g: KernelGraph, path) -> None:
    """Debug dump of all (i, j, S_ij) entries with i < j."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "s_ij"])
        n = g.n
        for i in range(n):
            for j in range(i + 1, n):
                writer.writerow([i, j, repr(g.S[i, j])])
