"""Discrete label-flip attacks for binary classification: greedy search, a
Gumbel-reparameterized probabilistic solver, an exhaustive oracle for small
instances, and the attacker-side target estimate."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import Task
from .errors import NumericError
from .propagation import PropagationOperator, squash_sign

ALPHA_EPS = 1e-6
EXHAUSTIVE_LIMIT = 2_000_000


@dataclass(frozen=True)
class FlipVector:
    """z in {-1, +1}^{n_l}; -1 marks a flipped training label."""

    z: np.ndarray
    flips: int

    @staticmethod
    def from_indices(n_l: int, indices) -> "FlipVector":
        z = np.ones(n_l)
        idx = np.asarray(sorted(indices), dtype=int)
        if idx.size:
            z[idx] = -1.0
        return FlipVector(z=z, flips=int(idx.size))

    @property
    def flip_indices(self) -> np.ndarray:
        return np.flatnonzero(self.z < 0)


@dataclass(frozen=True)
class FlipDistribution:
    """Per-label Bernoulli flip probabilities with the Gumbel smoothing
    hyperparameters.  alpha of None means "not optimized yet".

    With auto_lambda the regularizer weight is rescaled (bisection, starting
    from lambda_reg) until the expected flip count sum(alpha) sits near the
    budget; a fixed weak lambda lets every alpha saturate at the clamp
    bounds, which makes the top-c_max selection meaningless."""

    alpha: np.ndarray | None = None
    tau: float = 0.5
    lambda_reg: float = 0.01
    samples_per_step: int = 8
    steps: int = 500
    step_size: float = 0.05
    seed: int = 0
    auto_lambda: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be nonnegative")
        if self.samples_per_step < 1 or self.steps < 1 or self.step_size <= 0:
            raise ValueError("samples_per_step, steps and step_size must be positive")
        if self.alpha is not None:
            a = np.clip(np.asarray(self.alpha, dtype=float), ALPHA_EPS, 1.0 - ALPHA_EPS)
            object.__setattr__(self, "alpha", a)


def flip_objective(op: PropagationOperator, y_l, z, target) -> int:
    """Number of sign disagreements between sign(K(y_l o z)) and the target;
    maximizing this is the discrete attack objective."""
    pred = squash_sign(op.K @ (np.asarray(y_l) * np.asarray(z)))
    return int(np.sum(pred != squash_sign(target)))


def estimate_target(op: PropagationOperator, y_l, task: Task) -> np.ndarray:
    """Attacker-side stand-in for the unknown y_u: the clean prediction."""
    raw = op.K @ np.asarray(y_l, dtype=float)
    return squash_sign(raw) if task is Task.CLASSIFICATION else raw


def attack_cls_greedy(op: PropagationOperator, y_l, target, c_max: int) -> FlipVector:
    """Exactly c_max rounds; each round flips the not-yet-flipped index whose
    flip maximizes the post-flip disagreement count (ties to lowest index);
    flips are never reverted."""
    y_l = _check_labels(op, y_l)
    if not 0 <= c_max <= op.n_l:
        raise ValueError(f"c_max={c_max} outside [0, {op.n_l}]")
    target_sign = squash_sign(target)
    z = np.ones(op.n_l)
    for _ in range(c_max):
        scores = np.full(op.n_l, -1)
        for i in np.flatnonzero(z > 0):
            z[i] = -1.0
            scores[i] = flip_objective(op, y_l, z, target_sign)
            z[i] = 1.0
        pick = int(np.argmax(scores))  # argmax takes the lowest tied index
        z[pick] = -1.0
    return FlipVector(z=z, flips=int(np.sum(z < 0)))


def attack_cls_exhaustive(op: PropagationOperator, y_l, target, c_max: int) -> FlipVector:
    """Enumerate all flip sets of size <= c_max; exact maximizer of the
    disagreement count, lexicographically smallest among ties (fewer flips
    first, then lexicographic index order)."""
    y_l = _check_labels(op, y_l)
    if not 0 <= c_max <= op.n_l:
        raise ValueError(f"c_max={c_max} outside [0, {op.n_l}]")
    count = sum(math.comb(op.n_l, k) for k in range(c_max + 1))
    if count > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"{count} candidate flip sets exceed the exhaustive budget {EXHAUSTIVE_LIMIT}"
        )
    target_sign = squash_sign(target)
    best, best_obj = (), -1
    for k in range(c_max + 1):
        for combo in itertools.combinations(range(op.n_l), k):
            z = np.ones(op.n_l)
            z[list(combo)] = -1.0
            obj = flip_objective(op, y_l, z, target_sign)
            if obj > best_obj:
                best, best_obj = combo, obj
    return FlipVector.from_indices(op.n_l, best)


def gumbel_flip_relaxation(alpha, delta_g, tau: float) -> np.ndarray:
    """Smoothed flip variable z(alpha, Delta_G) in (-1, 1); tau -> 0 recovers
    the hard +-1 flip decision."""
    alpha = np.clip(np.asarray(alpha, dtype=float), ALPHA_EPS, 1.0 - ALPHA_EPS)
    logits = np.log(alpha / (1.0 - alpha)) + np.asarray(delta_g, dtype=float)
    return 2.0 / (1.0 + np.exp(logits / tau)) - 1.0


def optimize_flip_distribution(
    op: PropagationOperator, y_l, target, c_max: int, dist: FlipDistribution
) -> FlipDistribution:
    """Adam on the Monte-Carlo smoothed flip loss; returns the distribution
    with its optimized alpha (and, under auto_lambda, the rescaled weight)."""
    y_l = _check_labels(op, y_l)
    target = np.asarray(target, dtype=float)
    if not dist.auto_lambda:
        alpha = _adam_alpha(op, y_l, target, c_max, dist, dist.lambda_reg)
        return replace(dist, alpha=alpha)

    lam = max(dist.lambda_reg, 1e-6)
    lo_band, hi_band = 0.7 * c_max, 1.6 * c_max
    alpha = _adam_alpha(op, y_l, target, c_max, dist, lam)
    mass = float(alpha.sum())
    lam_lo = lam_hi = None
    for _ in range(20):
        if mass > hi_band:
            lam_lo, lam = lam, (lam * 8 if lam_hi is None else np.sqrt(lam * lam_hi))
        elif mass < lo_band:
            lam_hi, lam = lam, (lam / 8 if lam_lo is None else np.sqrt(lam * lam_lo))
        else:
            break
        alpha = _adam_alpha(op, y_l, target, c_max, dist, lam)
        mass = float(alpha.sum())
    return replace(dist, alpha=alpha, lambda_reg=float(lam))


def _adam_alpha(op, y_l, target, c_max, dist, lam):
    n_l = op.n_l
    rng = np.random.default_rng(dist.seed)
    alpha = (
        np.clip(dist.alpha, ALPHA_EPS, 1 - ALPHA_EPS)
        if dist.alpha is not None
        else np.full(n_l, np.clip(c_max / n_l, ALPHA_EPS, 1 - ALPHA_EPS))
    )
    m = np.zeros(n_l)
    v = np.zeros(n_l)
    b1, b2, eps = 0.9, 0.999, 1e-8
    for step in range(1, dist.steps + 1):
        delta_g = _gumbel_difference(rng, (dist.samples_per_step, n_l))
        grad, loss = _smoothed_loss_grad(op.K, y_l, target, alpha, delta_g,
                                         dist.tau, lam)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite smoothed loss at step {step}")
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        m_hat = m / (1 - b1**step)
        v_hat = v / (1 - b2**step)
        alpha = alpha - dist.step_size * m_hat / (np.sqrt(v_hat) + eps)
        alpha = np.clip(alpha, ALPHA_EPS, 1 - ALPHA_EPS)
    return alpha


def attack_cls_prob(
    op: PropagationOperator,
    y_l,
    target,
    c_max: int,
    dist: FlipDistribution | None = None,
) -> FlipVector:
    """Probabilistic solver: optimize the flip distribution, then flip the
    indices carrying the top-c_max probabilities."""
    if not 0 <= c_max <= op.n_l:
        raise ValueError(f"c_max={c_max} outside [0, {op.n_l}]")
    if c_max == 0:
        return FlipVector.from_indices(op.n_l, ())
    dist = dist or FlipDistribution()
    fitted = optimize_flip_distribution(op, y_l, target, c_max, dist)
    alpha = fitted.alpha
    if float(alpha.max() - alpha.min()) < 1e-9:
        warnings.warn(
            "degenerate flip distribution (alpha nearly uniform); "
            "top-c_max selection falls back to index order",
            RuntimeWarning,
            stacklevel=2,
        )
    order = np.argsort(-alpha, kind="stable")
    return FlipVector.from_indices(op.n_l, order[:c_max])


def _check_labels(op, y_l):
    y_l = np.asarray(y_l, dtype=float)
    if y_l.shape != (op.n_l,):
        raise ValueError(f"y_l must have length {op.n_l}")
    if not np.all(np.isin(y_l, (-1.0, 1.0))):
        raise ValueError("y_l must be a +-1 vector")
    return y_l


def _gumbel_difference(rng, shape):
    g1 = -np.log(-np.log(rng.uniform(size=shape)))
    g2 = -np.log(-np.log(rng.uniform(size=shape)))
    return g1 - g2


def _smoothed_loss_grad(K, y_l, target, alpha, delta_g, tau, lambda_reg):
    """Average pathwise gradient of
    -0.5||tanh(K(y_l o z(alpha, Delta_G))) - target||^2 + (lambda/2)||alpha||^2
    over the sampled Gumbel differences, plus the loss value."""
    logits = np.log(alpha / (1.0 - alpha)) + delta_g  # (samples, n_l)
    sig = 1.0 / (1.0 + np.exp(logits / tau))
    z = 2.0 * sig - 1.0
    flipped = y_l * z
    pred = np.tanh(flipped @ K.T)  # (samples, n_u)
    resid = pred - target
    losses = -0.5 * np.sum(resid * resid, axis=1)
    # back through tanh, K, the Hadamard flip, and z(alpha, .)
    d_flipped = -(resid * (1.0 - pred * pred)) @ K
    dz_dalpha = -2.0 * sig * (1.0 - sig) / (tau * alpha * (1.0 - alpha))
    grads = d_flipped * y_l * dz_dalpha
    grad = grads.mean(axis=0) + lambda_reg * alpha
    loss = float(losses.mean()) + 0.5 * lambda_reg * float(alpha @ alpha)
    return grad, loss
