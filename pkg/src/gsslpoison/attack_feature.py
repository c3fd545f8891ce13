"""Feature-matrix poisoning with row-wise group sparsity: proximal gradient
descent on the propagation loss, differentiating analytically through the
Gaussian kernel, the degree matrix and the linear solve (adjoint method)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import Dataset
from .errors import NumericError
from .graph import cross_kernel

ACTIVE_EPS = 1e-10


@dataclass(frozen=True)
class FeaturePerturbation:
    delta_x: np.ndarray
    active_rows: np.ndarray
    lambda_group: float
    loss_trace: np.ndarray


def group_soft_threshold(M: np.ndarray, t: float) -> np.ndarray:
    """Row-wise prox of t*sum_i ||row_i||: rows shrink by max(0, 1 - t/||row||)."""
    norms = np.linalg.norm(M, axis=1)
    scale = np.where(norms > 0, np.maximum(0.0, 1.0 - t / np.where(norms > 0, norms, 1.0)), 0.0)
    return M * scale[:, None]


def feature_loss_and_gradient(ds: Dataset, gamma: float, delta: np.ndarray):
    """Smooth part -0.5||K'(delta) y_l - y_u||^2 and its gradient w.r.t. the
    labeled-row perturbation (the group-lasso term is handled by the prox)."""
    X_l = ds.X_l + delta
    X_u = ds.X_u
    S_uu = cross_kernel(X_u, X_u, gamma)
    S_ul = cross_kernel(X_u, X_l, gamma)
    M = np.diag(S_uu.sum(axis=1) + S_ul.sum(axis=1)) - S_uu
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular propagation system") from exc
    y_hat = cho_solve(factor, S_ul @ ds.y_l)
    resid = y_hat - ds.y_u
    loss = -0.5 * float(resid @ resid)
    # adjoint of the solve: mu = M^{-1}(dJ/dy_hat) with dJ/dy_hat = -resid;
    # sensitivity to S'_uj is mu_u (y_lj - y_hat_u), then back through the
    # kernel entries
    mu = cho_solve(factor, -resid)
    W = (mu[:, None] * (ds.y_l[None, :] - y_hat[:, None])) * S_ul
    grad = -2.0 * gamma * (W.sum(axis=0)[:, None] * X_l - W.T @ X_u)
    return loss, grad


def attack_features(
    ds: Dataset,
    gamma: float,
    lambda_group: float,
    steps: int = 100,
    step_size: float = 1.0,
) -> FeaturePerturbation:
    """Proximal gradient descent on the poisoning loss plus the group-lasso
    row penalty, backtracking (step halving) until each step does not
    increase the composite loss.  Only labeled rows are perturbed."""
    if lambda_group < 0:
        raise ValueError("lambda_group must be nonnegative")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if step_size <= 0:
        raise ValueError("step_size must be positive")
    if ds.n_u < 1:
        raise ValueError("feature attack needs unlabeled rows")

    def composite(delta, smooth):
        return smooth + lambda_group * float(np.linalg.norm(delta, axis=1).sum())

    delta = np.zeros((ds.n_l, ds.d))
    try:
        smooth, grad = feature_loss_and_gradient(ds, gamma, delta)
    except NumericError as exc:
        raise NumericError(f"{exc} at step 0") from None
    trace = [composite(delta, smooth)]
    for k in range(1, steps + 1):
        step = step_size
        accepted = False
        for _ in range(30):
            cand = group_soft_threshold(delta - step * grad, step * lambda_group)
            try:
                smooth_c, grad_c = feature_loss_and_gradient(ds, gamma, cand)
            except NumericError as exc:
                raise NumericError(f"{exc} at step {k}") from None
            if composite(cand, smooth_c) <= trace[-1] + 1e-15 * (1.0 + abs(trace[-1])):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        delta, smooth, grad = cand, smooth_c, grad_c
        trace.append(composite(delta, smooth))
    active = np.flatnonzero(np.linalg.norm(delta, axis=1) > ACTIVE_EPS)
    return FeaturePerturbation(
        delta_x=delta,
        active_rows=active,
        lambda_group=float(lambda_group),
        loss_trace=np.asarray(trace),
    )
