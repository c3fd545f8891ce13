"""Continuous label-poisoning attacks for regression: the SVD direction for
estimated labels, the trust-region solve for true labels, and the sparse
(cardinality-capped) variant via truncated power iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagation import PropagationOperator
from .trustregion import TrustRegionConfig, TrustRegionProblem, solve_tr

SUPPORT_EPS = 1e-12


@dataclass(frozen=True)
class LabelPerturbation:
    """Additive perturbation of the labeled targets under an l2 budget."""

    delta_y: np.ndarray
    budget_l2: float
    support_size: int
    objective: float
    certified_global: bool = False


def _perturbation(delta, d_max, objective, certified=False):
    support = int(np.sum(np.abs(delta) > SUPPORT_EPS))
    return LabelPerturbation(
        delta_y=delta,
        budget_l2=float(d_max),
        support_size=support,
        objective=float(objective),
        certified_global=certified,
    )


def _fix_sign(v):
    """First nonzero coordinate positive; the objective is sign-invariant."""
    nz = np.flatnonzero(np.abs(v) > SUPPORT_EPS)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def attack_reg_estimated(op: PropagationOperator, d_max: float) -> LabelPerturbation:
    """delta_y = +-d_max v1 with v1 the top right singular vector of K;
    maximizes ||K delta|| over the l2 ball."""
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    if d_max == 0.0:
        return _perturbation(np.zeros(op.n_l), 0.0, 0.0, certified=True)
    _, svals, vt = np.linalg.svd(op.K, full_matrices=False)
    delta = _fix_sign(d_max * vt[0])
    return _perturbation(delta, d_max, -0.5 * (svals[0] * d_max) ** 2, certified=True)


def attack_reg_true(
    op: PropagationOperator,
    y_l: np.ndarray,
    y_u: np.ndarray,
    d_max: float,
    cfg: TrustRegionConfig | None = None,
) -> LabelPerturbation:
    """Globally optimal perturbation of the labeled targets when the attacker
    knows the true unlabeled labels: a trust-region solve with H = -K'K and
    g = K'(y_u - y_hat)."""
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    y_l = np.asarray(y_l, dtype=float)
    y_u = np.asarray(y_u, dtype=float)
    if y_l.shape != (op.n_l,) or y_u.shape != (op.n_u,):
        raise ValueError("y_l / y_u dimensions do not match the operator")
    residual = y_u - op.K @ y_l
    if d_max == 0.0:
        return _perturbation(np.zeros(op.n_l), 0.0, -0.5 * float(residual @ residual),
                             certified=True)
    problem = TrustRegionProblem(H=-(op.K.T @ op.K), g=op.K.T @ residual, radius=d_max)
    sol = solve_tr(problem, cfg)
    # value of the attack objective -0.5||K(y_l+delta) - y_u||^2
    objective = sol.value - 0.5 * float(residual @ residual)
    return _perturbation(sol.z_star, d_max, objective, certified=sol.certified_global)


def attack_reg_sparse(
    op: PropagationOperator,
    d_max: float,
    c_max: int,
    restarts: int = 20,
    iters: int = 300,
    seed: int = 0,
) -> LabelPerturbation:
    """At most c_max nonzeros on the l2 sphere of radius d_max, approximately
    maximizing ||K delta||^2.

    Truncated power iteration on K'K (keep the top-c_max magnitudes each
    sweep, renormalize) with seeded random restarts plus the truncated dense
    singular vector as one start; exact for c_max = 1 and c_max = n_l.
    """
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    if not 1 <= c_max <= op.n_l:
        raise ValueError(f"c_max={c_max} outside [1, {op.n_l}]")
    if d_max == 0.0:
        return _perturbation(np.zeros(op.n_l), 0.0, 0.0)
    if c_max == op.n_l:
        return attack_reg_estimated(op, d_max)
    if c_max == 1:
        col_norms = np.linalg.norm(op.K, axis=0)
        best = int(np.argmax(col_norms))
        delta = np.zeros(op.n_l)
        delta[best] = d_max
        return _perturbation(delta, d_max, -0.5 * (col_norms[best] * d_max) ** 2)

    A = op.K.T @ op.K
    _, _, vt = np.linalg.svd(op.K, full_matrices=False)
    rng = np.random.default_rng(seed)
    starts = [vt[0]] + [rng.standard_normal(op.n_l) for _ in range(restarts)]
    best_v, best_obj = None, -np.inf
    for v in starts:
        v = _truncate(v, c_max)
        for _ in range(iters):
            v_new = _truncate(A @ v, c_max)
            if np.linalg.norm(v_new - v) <= 1e-14:
                v = v_new
                break
            v = v_new
        obj = float(v @ (A @ v))
        if obj > best_obj + 1e-15:
            best_obj, best_v = obj, v
    delta = _fix_sign(d_max * best_v)
    return _perturbation(delta, d_max, -0.5 * best_obj * d_max**2)


def _truncate(v, c_max):
    """Keep the c_max largest magnitudes (ties to lower index), renormalize."""
    keep = np.argsort(-np.abs(v), kind="stable")[:c_max]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    norm = np.linalg.norm(out)
    if norm == 0.0:
        out[keep[0]] = 1.0
        return out
    return out / norm
