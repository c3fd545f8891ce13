"""Linear manifold-regularized semi-supervised regression and the
trust-region label attack against it (transductive and inductive use)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack_regression import LabelPerturbation, _perturbation
from .data import Dataset
from .errors import NumericError
from .graph import KernelGraph
from .trustregion import TrustRegionConfig, TrustRegionProblem, solve_tr


@dataclass(frozen=True)
class ManifoldModel:
    """w = P y_l with P = (X_l'X_l + lambda I + beta X'LX)^{-1} X_l'."""

    w: np.ndarray
    lambda_ridge: float
    beta_manifold: float
    P: np.ndarray


def fit_manifold(
    ds: Dataset,
    g: KernelGraph,
    lambda_ridge: float = 0.1,
    beta_manifold: float = 0.1,
) -> ManifoldModel:
    """Closed-form ridge + Laplacian-smoothness fit over the labeled block,
    with the graph built on labeled+unlabeled rows only."""
    if lambda_ridge <= 0:
        raise ValueError("lambda_ridge must be positive")
    if beta_manifold < 0:
        raise ValueError("beta_manifold must be nonnegative")
    if g.n != ds.n:
        raise ValueError("graph size does not match the dataset")
    X_l = ds.X_l
    X = ds.features
    A = X_l.T @ X_l + lambda_ridge * np.eye(ds.d) + beta_manifold * (X.T @ (g.laplacian @ X))
    if np.linalg.cond(A) > 1e12:
        raise NumericError("ill-conditioned manifold system")
    P = np.linalg.solve(A, X_l.T)
    return ManifoldModel(
        w=P @ ds.y_l,
        lambda_ridge=float(lambda_ridge),
        beta_manifold=float(beta_manifold),
        P=P,
    )


def manifold_predict(model: ManifoldModel, X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=float) @ model.w


def attack_manifold(
    model: ManifoldModel,
    X_u: np.ndarray,
    y_l: np.ndarray,
    y_u: np.ndarray,
    d_max: float,
    cfg: TrustRegionConfig | None = None,
) -> LabelPerturbation:
    """Trust-region label attack on the fitted model: predictions are linear
    in y_l through X_u P, so H = -(X_u P)'(X_u P) and g = (X_u P)'(y_u - pred)."""
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    B = np.asarray(X_u, dtype=float) @ model.P
    y_l = np.asarray(y_l, dtype=float)
    y_u = np.asarray(y_u, dtype=float)
    residual = y_u - B @ y_l
    if d_max == 0.0:
        return _perturbation(np.zeros(y_l.shape[0]), 0.0,
                             -0.5 * float(residual @ residual), certified=True)
    problem = TrustRegionProblem(H=-(B.T @ B), g=B.T @ residual, radius=d_max)
    sol = solve_tr(problem, cfg)
    objective = sol.value - 0.5 * float(residual @ residual)
    return _perturbation(sol.z_star, d_max, objective, certified=sol.certified_global)
