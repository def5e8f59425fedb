"""Smooth and non-convex relaxation solvers: SL0, LiMapS, and FOCUSS.

All three start from the least-squares solution, alternate a sparsity-
promoting step with a projection back onto the solution affine space, and
return the final iterate hard-thresholded at 1e-8 into an exact support
(relaxation iterates are never exactly sparse). `objective_trace` holds the
smoothed-l0 value per sigma stage for SL0 and the iterate-change norm per
iteration for LiMapS and FOCUSS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RecoveryResult, SparseCode, as_frame, as_signal

__all__ = [
    "Sl0Config",
    "LimapsConfig",
    "FocussConfig",
    "smoothed_l0",
    "sl0",
    "limaps",
    "focuss",
    "shrinkage",
]

_RANK_TOL = 1e-10
_SUPPORT_THRESHOLD = 1e-8


def smoothed_l0(alpha, sigma: float) -> float:
    """Gaussian-smoothed sparsity score F_sigma = sum_i exp(-a_i^2 / 2 sigma^2).

    As sigma -> 0 this tends to (len(alpha) - ||alpha||_0), so maximizing it
    over the feasible set approximately minimizes the l0 pseudo-norm.
    """
    a = np.asarray(alpha, dtype=float)
    return float(np.exp(-(a**2) / (2.0 * sigma**2)).sum())


def shrinkage(alpha, lam: float) -> np.ndarray:
    """LiMapS shrinkage map f_lam(a) = a (1 - exp(-lam |a|)), applied entrywise."""
    a = np.asarray(alpha, dtype=float)
    return a * (1.0 - np.exp(-lam * np.abs(a)))


def _full_row_rank_pinv(phi, solver: str) -> np.ndarray:
    svals = np.linalg.svd(phi, compute_uv=False)
    if svals[0] == 0.0 or svals[min(phi.shape) - 1] <= _RANK_TOL * svals[0] or phi.shape[0] > phi.shape[1]:
        raise ValueError(f"{solver} requires a full-row-rank frame")
    return np.linalg.pinv(phi)


def _finish(phi, s, alpha, iterations, converged, trace) -> RecoveryResult:
    sparse = np.where(np.abs(alpha) > _SUPPORT_THRESHOLD, alpha, 0.0)
    code = SparseCode(sparse)
    return RecoveryResult(
        code=code,
        residual_norm=float(np.linalg.norm(phi @ code.values - s)),
        iterations=iterations,
        converged=converged,
        objective_trace=tuple(trace),
    )


@dataclass(frozen=True)
class Sl0Config:
    """Schedule and step controls for SL0.

    When `sigma_schedule` is None the schedule starts at 2 max|a_0| and
    decays geometrically by `sigma_decay` until it drops below `sigma_min`.
    """

    sigma_schedule: tuple[float, ...] | None = None
    sigma_decay: float = 0.5
    sigma_min: float = 1e-10
    inner_steps: int = 3
    step_mu: float = 2.0

    def __post_init__(self):
        if self.sigma_schedule is not None:
            sched = tuple(float(v) for v in self.sigma_schedule)
            if not sched or any(v <= 0 for v in sched):
                raise ValueError("sigma schedule must be positive")
            if any(b >= a for a, b in zip(sched, sched[1:])):
                raise ValueError("sigma schedule must be strictly decreasing")
            object.__setattr__(self, "sigma_schedule", sched)
        if not 0 < self.sigma_decay < 1:
            raise ValueError("sigma_decay must lie in (0, 1)")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be at least 1")
        if self.step_mu <= 0:
            raise ValueError("step_mu must be positive")


def sl0(phi, s, cfg: Sl0Config | None = None) -> RecoveryResult:
    """Smoothed-l0 recovery by steepest ascent on F_sigma with decreasing sigma.

    Starting from the least-squares solution, each sigma stage runs
    `inner_steps` gradient steps a <- a - mu * a exp(-a^2/2 sigma^2), each
    followed by the exact projection a <- a - pinv(phi) (phi a - s), so every
    stage ends feasible.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    cfg = cfg or Sl0Config()
    pinv = _full_row_rank_pinv(phi, "sl0")

    s_norm = float(np.linalg.norm(s))
    alpha = pinv @ s
    if s_norm == 0.0:
        return _finish(phi, s, np.zeros(phi.shape[1]), 0, True, ())

    if cfg.sigma_schedule is not None:
        sigmas = list(cfg.sigma_schedule)
    else:
        sigmas = []
        sigma = 2.0 * float(np.abs(alpha).max())
        while sigma > cfg.sigma_min:
            sigmas.append(sigma)
            sigma *= cfg.sigma_decay
        if not sigmas:
            sigmas = [cfg.sigma_min]

    trace = []
    for sigma in sigmas:
        for _ in range(cfg.inner_steps):
            alpha = alpha - cfg.step_mu * alpha * np.exp(-(alpha**2) / (2.0 * sigma**2))
            alpha = alpha - pinv @ (phi @ alpha - s)
        trace.append(smoothed_l0(alpha, sigma))

    feasible = float(np.linalg.norm(phi @ alpha - s)) <= 1e-9 * s_norm
    return _finish(phi, s, alpha, len(sigmas) * cfg.inner_steps, feasible, trace)


@dataclass(frozen=True)
class LimapsConfig:
    """Shrinkage schedule for LiMapS.

    The default geometric schedule starts at 1 / max|a_0| and grows by
    `lambda_growth` per iteration; an explicit increasing `lambda_schedule`
    overrides it (and bounds the iteration count).
    """

    lambda_schedule: tuple[float, ...] | None = None
    lambda_growth: float = 1.05
    max_iterations: int = 2000
    convergence_tol: float = 1e-15

    def __post_init__(self):
        if self.lambda_schedule is not None:
            sched = tuple(float(v) for v in self.lambda_schedule)
            if not sched or any(v <= 0 for v in sched):
                raise ValueError("lambda schedule must be positive")
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise ValueError("lambda schedule must be strictly increasing")
            object.__setattr__(self, "lambda_schedule", sched)
        if self.lambda_growth <= 1.0:
            raise ValueError("lambda_growth must exceed 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")


def limaps(phi, s, cfg: LimapsConfig | None = None) -> RecoveryResult:
    """Lipschitzian-mapping recovery: shrink, then project onto phi a = s.

    Iterates a <- f_lam(a) - pinv(phi) (phi f_lam(a) - s) with the shrinkage
    f_lam(a) = a (1 - exp(-lam |a|)) and an increasing lambda schedule; every
    iterate is feasible. Stops when the iterate change drops below
    `convergence_tol` or the schedule is exhausted.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    cfg = cfg or LimapsConfig()
    pinv = _full_row_rank_pinv(phi, "limaps")

    s_norm = float(np.linalg.norm(s))
    if s_norm == 0.0:
        return _finish(phi, s, np.zeros(phi.shape[1]), 0, True, ())
    alpha = pinv @ s

    if cfg.lambda_schedule is not None:
        lambdas = iter(cfg.lambda_schedule)
        budget = len(cfg.lambda_schedule)
    else:
        lam0 = 1.0 / float(np.abs(alpha).max())

        def _geometric():
            lam = lam0
            while True:
                yield lam
                lam *= cfg.lambda_growth

        lambdas = _geometric()
        budget = cfg.max_iterations

    trace = []
    converged = False
    it = 0
    for lam in lambdas:
        if it >= budget:
            break
        gamma = shrinkage(alpha, lam)
        new = gamma - pinv @ (phi @ gamma - s)
        change = float(np.linalg.norm(new - alpha))
        alpha = new
        it += 1
        trace.append(change)
        if change <= cfg.convergence_tol:
            converged = True
            break

    return _finish(phi, s, alpha, it, converged, trace)


@dataclass(frozen=True)
class FocussConfig:
    """IRLS controls for FOCUSS; the reweighting exponent is t = 1 - q/2."""

    q: float = 0.5
    max_iterations: int = 200
    fixed_point_tol: float = 1e-10
    zero_clamp: float = 1e-12

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError("q must lie in (0, 1]")
        if not 0 < self.zero_clamp < 1e-8:
            raise ValueError("zero_clamp must lie in (0, 1e-8)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    @property
    def t(self) -> float:
        return 1.0 - self.q / 2.0


def _focuss_iterates(phi, s, cfg: FocussConfig):
    """Yield the FOCUSS iterates, starting with the least-squares solution.

    Each step solves the weighted least squares min ||pinv(B) beta||_2^2
    s.t. phi beta = s with B = diag(|beta|^t) via beta <- B (phi B)^+ s.
    Entries at or below `zero_clamp` are set to exactly zero and, because
    their weight is then zero, stay zero in all later iterates.
    """
    pinv = np.linalg.pinv(phi)
    beta = pinv @ s
    beta[np.abs(beta) <= cfg.zero_clamp] = 0.0
    yield beta
    for _ in range(cfg.max_iterations):
        weights = np.abs(beta) ** cfg.t
        w = np.linalg.lstsq(phi * weights, s, rcond=None)[0]
        beta = weights * w
        beta[np.abs(beta) <= cfg.zero_clamp] = 0.0
        yield beta


def focuss(phi, s, cfg: FocussConfig | None = None) -> RecoveryResult:
    """FOCUSS: iteratively reweighted least squares for the lq relaxation.

    Zero coefficients are absorbing, which drives the iterates toward sparse
    fixed points. Stops when the iterate change falls below
    `fixed_point_tol` (relative to the iterate norm) or at the iteration cap.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    cfg = cfg or FocussConfig()
    _full_row_rank_pinv(phi, "focuss")

    s_norm = float(np.linalg.norm(s))
    if s_norm == 0.0:
        return _finish(phi, s, np.zeros(phi.shape[1]), 0, True, ())

    iterates = _focuss_iterates(phi, s, cfg)
    beta = next(iterates)
    trace = []
    converged = False
    it = 0
    for new in iterates:
        change = float(np.linalg.norm(new - beta))
        scale = max(1.0, float(np.linalg.norm(beta)))
        beta = new
        it += 1
        trace.append(change)
        if not np.any(beta):
            converged = s_norm == 0.0
            break
        if change <= cfg.fixed_point_tol * scale:
            converged = True
            break

    return _finish(phi, s, beta, it, converged, trace)
