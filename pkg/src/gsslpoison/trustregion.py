"""Two-phase gradient solver for min_{||z|| <= radius} 0.5 z'Hz + g'z with
indefinite or negative-semidefinite H, plus an independent eigendecomposition
oracle and the closed-form phase-I iteration bound.

Phase I runs plain gradient descent from a short step along -g until the
iterate reaches the unit sphere; phase II runs Armijo-line-searched projected
(sphere-tangent) gradient steps.  An optional matvec-only Riemannian
Newton-CG polish (trace phase 3) sharpens the last digits of the KKT
residual, which plain gradient steps cannot reach in reasonable time when
the bottom eigenvalues of H cluster.  Problems with radius != 1 are rescaled
to the unit ball internally and results mapped back.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

_HARD_CASE_RTOL = 1e-10
_JITTER_SCALE = 1e-8
_JITTER_SEED = 20240311
_REFRESH_EVERY = 512  # recompute cached H z / f to kill drift


@dataclass(frozen=True)
class TrustRegionProblem:
    H: np.ndarray
    g: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if g.shape != (H.shape[0],):
            raise ValueError("g must match H")
        asym = np.abs(H - H.T).max() if H.size else 0.0
        if asym > 1e-10 * max(1.0, np.abs(H).max()):
            raise ValueError(f"H not symmetric (max asymmetry {asym:.3e})")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def value(self, z: np.ndarray) -> float:
        return float(0.5 * z @ (self.H @ z) + self.g @ z)


@dataclass
class TrustRegionConfig:
    """Solver knobs.  eta/alpha0 of None resolve to 0.9/||H||_op and the
    initialization cap 0.5*min(1, ||g||^3/|g'Hg|)."""

    eta: float | None = None
    alpha0: float = 0.5
    max_iter: int = 50000
    tol: float = 1e-10
    ls_alpha_bar: float = 1.0
    ls_sigma: float = 1e-4
    ls_beta: float = 0.5
    polish: bool = True

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if not 0 < self.ls_sigma < 1:
            raise ValueError("ls_sigma must lie in (0, 1)")
        if not 0 < self.ls_beta < 1:
            raise ValueError("ls_beta must lie in (0, 1)")
        if self.tol <= 0 or self.max_iter < 1 or self.ls_alpha_bar <= 0:
            raise ValueError("tol, max_iter and ls_alpha_bar must be positive")


@dataclass
class TrustRegionTrace:
    """Recorded iterates in unit-ball coordinates (phase 1, 2 or 3 per row)."""

    phases: np.ndarray
    values: np.ndarray
    norms: np.ndarray
    iterates: np.ndarray


@dataclass
class TrustRegionSolution:
    z_star: np.ndarray
    value: float
    phase1_iters: int
    total_iters: int
    multiplier: float
    certified_global: bool
    trace: TrustRegionTrace | None = field(default=None, repr=False)


def estimate_opnorm(H: np.ndarray, iters: int = 100) -> float:
    """Power-iteration estimate of the spectral norm (deterministic start)."""
    n = H.shape[0]
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = H @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(H @ v))


def _resolve_steps(H, g, cfg, opnorm):
    """Step size eta (validated) and clamped initialization scale alpha."""
    beta = max(opnorm, 1e-12)
    if cfg.eta is None:
        eta = 0.9 / beta
    else:
        if not 0 < cfg.eta < 1.0 / beta:
            raise ValueError(
                f"eta={cfg.eta} violates 0 < eta < 1/||H||_op ~ {1.0 / beta:.3e}"
            )
        eta = cfg.eta
    gng = float(np.linalg.norm(g))
    gHg = abs(float(g @ (H @ g)))
    ratio = np.inf if gHg == 0.0 else gng**3 / gHg
    alpha = min(cfg.alpha0, 0.5 * min(1.0, ratio))
    return eta, alpha


def _scaled(problem: TrustRegionProblem):
    """Rescale to the unit ball: delta = radius*z, H <- radius^2 H, g <- radius*g."""
    r = problem.radius
    if r == 1.0:
        return problem.H, problem.g
    return (r * r) * problem.H, r * problem.g


def _jitter_if_hard(H, g, eigvals, eigvecs):
    """Replace g when it has (numerically) no component in the bottom
    eigenspace while curvature is negative; warn and proceed."""
    lam1 = eigvals[0]
    if lam1 >= 0:
        return g
    sub = eigvals <= lam1 + _HARD_CASE_RTOL * max(1.0, abs(lam1))
    gng = np.linalg.norm(g)
    proj = np.linalg.norm(eigvecs[:, sub].T @ g)
    if proj > _HARD_CASE_RTOL * max(gng, 1e-300):
        return g
    scale = _JITTER_SCALE * (gng if gng > 0 else 1.0)
    warnings.warn(
        "hard case detected (no gradient component along the bottom "
        f"eigenspace); adding Gaussian jitter of scale {scale:.1e}",
        RuntimeWarning,
        stacklevel=3,
    )
    rng = np.random.default_rng(_JITTER_SEED)
    return g + scale * rng.standard_normal(g.shape[0])


class _Recorder:
    def __init__(self, enabled):
        self.enabled = enabled
        self.phases, self.values, self.norms, self.iterates = [], [], [], []

    def add(self, phase, z, f):
        if self.enabled:
            self.phases.append(phase)
            self.values.append(f)
            self.norms.append(float(np.linalg.norm(z)))
            self.iterates.append(z.copy())

    def pack(self):
        if not self.phases:
            return None
        return TrustRegionTrace(
            phases=np.asarray(self.phases),
            values=np.asarray(self.values),
            norms=np.asarray(self.norms),
            iterates=np.asarray(self.iterates),
        )


def solve_tr(
    problem: TrustRegionProblem,
    cfg: TrustRegionConfig | None = None,
    record_trace: bool = False,
) -> TrustRegionSolution:
    """Run the two-phase solver (plus optional Newton-CG polish) and certify.

    The returned multiplier lam satisfies (H + lam I) z* + g ~ 0 in the
    problem's original coordinates; certified_global additionally checks
    lam + lambda_min(H) >= -tol, the global-optimality condition.
    """
    cfg = cfg or TrustRegionConfig()
    H, g = _scaled(problem)
    eigvals, eigvecs = np.linalg.eigh(H)
    g = _jitter_if_hard(H, g, eigvals, eigvecs)
    gng = float(np.linalg.norm(g))
    rec = _Recorder(record_trace)
    if gng == 0.0:
        # lambda_min >= 0 and g = 0: the origin is the global minimum.
        z = np.zeros(problem.n)
        return _finish(problem, H, g, eigvals, z, 0, 0, cfg.tol, True, False, rec)

    opnorm = estimate_opnorm(H)
    eta, alpha = _resolve_steps(H, g, cfg, opnorm)

    def f_of(z):
        return float(0.5 * z @ (H @ z) + g @ z)

    # ---- phase I: plain gradient descent inside the ball ----
    z = -(alpha / gng) * g
    Hz = H @ z
    rec.add(1, z, f_of(z))
    t1 = 0
    total = 0
    interior = False
    while float(np.linalg.norm(z)) < 1.0:
        grad = Hz + g
        if float(np.linalg.norm(grad)) <= cfg.tol * (1.0 + gng):
            interior = True
            break
        if total >= cfg.max_iter:
            return _finish(problem, H, g, eigvals, z, t1, total, cfg.tol,
                           False, False, rec)
        z = z - eta * grad
        Hz = Hz - eta * (H @ grad)
        t1 += 1
        total += 1
        if t1 % _REFRESH_EVERY == 0:
            Hz = H @ z
        rec.add(1, z, f_of(z))

    if interior:
        return _finish(problem, H, g, eigvals, z, t1, total, cfg.tol,
                       True, False, rec)

    # ---- phase II: Armijo projected gradient on the sphere ----
    z = z / float(np.linalg.norm(z))
    Hz = H @ z
    fz = f_of(z)
    rec.add(2, z, fz)
    converged = False
    polish_at = 1e-5 * (1.0 + gng)
    stalled = False
    while total < cfg.max_iter:
        grad = Hz + g
        kappa = float(z @ grad)
        r = grad - kappa * z
        rn2 = float(r @ r)
        rn = np.sqrt(rn2)
        if rn <= cfg.tol:
            converged = True
            break
        if cfg.polish and rn <= polish_at:
            break
        Hr = H @ r
        zHz = float(z @ Hz)
        zHr = float(z @ Hr)
        rHr = float(r @ Hr)
        gz = float(g @ z)
        gr = float(g @ r)
        # Initial step capped so every candidate keeps the sign pattern
        # z^(i) g^(i) <= 0 intact (needs alpha*(lam_max - kappa) <= 1).
        cap = 1.0 / max(1.05 * opnorm - kappa, 1e-30)
        step = min(cfg.ls_alpha_bar, cap)
        accepted = False
        while step >= 1e-20:
            s2 = 1.0 + step * step * rn2
            s = np.sqrt(s2)
            # f(z+) - f(z) via cancellation-free scalar algebra
            quad = 0.5 * step * (-2.0 * zHr + step * (rHr - rn2 * zHz)) / s2
            lin = (-gz * step * step * rn2 / (1.0 + s) - step * gr) / s
            dec = quad + lin
            if dec <= -cfg.ls_sigma * step * rn2:
                accepted = True
                break
            step *= cfg.ls_beta
        if not accepted:
            stalled = True  # numerically stationary for the line search
            break
        inv_s = 1.0 / np.sqrt(1.0 + step * step * rn2)
        z = (z - step * r) * inv_s
        Hz = (Hz - step * Hr) * inv_s
        fz += dec
        total += 1
        if total % _REFRESH_EVERY == 0:
            z = z / float(np.linalg.norm(z))
            Hz = H @ z
            fz = f_of(z)
        rec.add(2, z, fz)

    # ---- phase III: Riemannian Newton-CG polish (matvec only) ----
    if not converged and cfg.polish:
        z, polished = _newton_polish(H, g, z, cfg.tol, gng, rec, f_of)
        converged = polished or stalled or total < cfg.max_iter
    elif not converged and stalled:
        converged = True  # certify whatever the stalled iterate gives

    return _finish(problem, H, g, eigvals, z, t1, total, cfg.tol,
                   converged, True, rec)


def _newton_polish(H, g, z, tol, gng, rec, f_of, max_newton=30):
    """Riemannian Newton steps on the sphere; the tangent system
    (I-zz')(H + lam I)(I-zz') d = -r is solved by CG (Steihaug-style stop on
    nonpositive curvature).  Steps are halved until f does not increase."""
    fz = f_of(z)
    for _ in range(max_newton):
        grad = H @ z + g
        lam = -float(z @ grad)
        r = grad + lam * z
        rn = float(np.linalg.norm(r))
        if rn <= tol:
            return z, True
        d = _tangent_cg(H, lam, z, -r, rtol=min(0.1, np.sqrt(rn)))
        improved = False
        for _ in range(60):
            cand = z + d
            cand /= float(np.linalg.norm(cand))
            fc = f_of(cand)
            if fc <= fz + 1e-14 * (1.0 + abs(fz)):
                z, fz = cand, fc
                rec.add(3, z, fz)
                improved = True
                break
            d = 0.5 * d
        if not improved:
            return z, False
    return z, float(np.linalg.norm((H @ z + g) - float(z @ (H @ z + g)) * z)) <= tol


def _tangent_cg(H, lam, z, rhs, rtol, max_cg=None):
    n = z.shape[0]
    max_cg = max_cg or 2 * n
    proj = lambda v: v - float(z @ v) * z
    b = proj(rhs)
    d = np.zeros(n)
    res = b.copy()
    p = res.copy()
    rr = float(res @ res)
    target = rtol * rtol * rr
    for _ in range(max_cg):
        Ap = proj(H @ p + lam * p)
        pAp = float(p @ Ap)
        if pAp <= 1e-30 * float(p @ p):
            break  # nonpositive curvature; keep current iterate
        a = rr / pAp
        d = d + a * p
        res = res - a * Ap
        rr_new = float(res @ res)
        if rr_new <= target:
            break
        p = res + (rr_new / rr) * p
        rr = rr_new
    return proj(d)


def _finish(problem, H, g, eigvals, z, t1, total, tol, converged, on_boundary, rec):
    gng = float(np.linalg.norm(g))
    resid_grad = H @ z + g
    lam = max(0.0, -float(z @ resid_grad)) if on_boundary else 0.0
    kkt_resid = float(np.linalg.norm(resid_grad + lam * z))
    certified = bool(
        converged
        and kkt_resid <= tol * (1.0 + gng)
        and lam + eigvals[0] >= -tol
    )
    r = problem.radius
    return TrustRegionSolution(
        z_star=r * z,
        value=float(0.5 * z @ (H @ z) + g @ z),
        phase1_iters=t1,
        total_iters=total,
        multiplier=lam / (r * r),
        certified_global=certified,
        trace=rec.pack(),
    )


def oracle_tr(problem: TrustRegionProblem) -> TrustRegionSolution:
    """Ground-truth solver: full eigendecomposition plus the secular equation
    sum_i (g^(i) / (lam_i + lam))^2 = 1 solved by safeguarded bisection+Newton.

    Easy case only; a hard-case instance raises NumericError instructing the
    caller to jitter g.
    """
    H, g = _scaled(problem)
    eigvals, eigvecs = np.linalg.eigh(H)
    ghat = eigvecs.T @ g
    lam1 = float(eigvals[0])
    gng = float(np.linalg.norm(g))

    if lam1 < 0:
        sub = eigvals <= lam1 + _HARD_CASE_RTOL * max(1.0, abs(lam1))
        if np.linalg.norm(ghat[sub]) <= 1e-12 * max(1.0, gng):
            raise NumericError(
                "hard case: g has no component along the bottom eigenspace; "
                "add a small jitter to g and retry"
            )
    elif gng == 0.0:
        return _oracle_solution(problem, H, g, np.zeros(problem.n), 0.0, 0)
    if lam1 > 0:
        z_int = -(ghat / eigvals)
        if np.linalg.norm(z_int) <= 1.0:
            return _oracle_solution(problem, H, g, eigvecs @ z_int, 0.0, 0)

    lo = max(0.0, -lam1)

    def znorm(lam):
        with np.errstate(divide="ignore", over="ignore"):
            return float(np.sqrt(np.sum((ghat / (eigvals + lam)) ** 2)))

    a = lo
    b = lo + max(1.0, gng)
    while znorm(b) > 1.0:
        b = lo + 2.0 * (b - lo)
    lam = b
    iters = 0
    for iters in range(1, 201):
        nz = znorm(lam)
        if abs(nz - 1.0) <= 1e-13:
            break
        if nz > 1.0:
            a = lam
        else:
            b = lam
        denom = eigvals + lam
        hp = float(np.sum(ghat**2 / denom**3)) / nz**3
        h = 1.0 / nz - 1.0
        lam_newton = lam - h / hp if hp > 0 else np.nan
        if np.isfinite(lam_newton) and a < lam_newton < b:
            lam = lam_newton
        else:
            lam = 0.5 * (a + b)
        if b - a <= 1e-15 * max(1.0, b):
            break
    z = eigvecs @ (-(ghat / (eigvals + lam)))
    return _oracle_solution(problem, H, g, z, lam, iters)


def _oracle_solution(problem, H, g, z, lam, iters):
    r = problem.radius
    return TrustRegionSolution(
        z_star=r * z,
        value=float(0.5 * z @ (H @ z) + g @ z),
        phase1_iters=0,
        total_iters=iters,
        multiplier=lam / (r * r),
        certified_global=True,
        trace=None,
    )


def phase1_bound(problem: TrustRegionProblem, cfg: TrustRegionConfig | None = None) -> float:
    """Closed-form upper bound on the number of phase-I iterations, evaluated
    with the same resolved eta and alpha the solver would use."""
    cfg = cfg or TrustRegionConfig()
    H, g = _scaled(problem)
    eigvals, eigvecs = np.linalg.eigh(H)
    lam1 = float(eigvals[0])
    if lam1 >= 0:
        raise ValueError("phase-I bound requires negative curvature (lambda_min < 0)")
    g1 = float(eigvecs[:, 0] @ g)
    gng = float(np.linalg.norm(g))
    if abs(g1) <= 1e-12 * max(1.0, gng):
        raise NumericError("hard case: bound undefined for g orthogonal to v1")
    eta, alpha = _resolve_steps(H, g, cfg, estimate_opnorm(H))
    # -z0^(1)/(eta g^(1)) with z0 = -alpha g/||g|| reduces to alpha/(eta ||g||)
    growth = np.log(1.0 - eta * lam1)
    hi = np.log(1.0 / (eta * abs(g1)) - 1.0 / (eta * lam1))
    lo = np.log(alpha / (eta * gng) - 1.0 / (eta * lam1))
    return float((hi - lo) / growth)
