"""Greedy atom-selection solvers: matching pursuit and its orthogonal variants.

All three solvers require unit-norm atoms and break argmax/argmin ties by
lowest index, so runs are deterministic. `objective_trace` holds the residual
norm after every iteration (starting with ||s||).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RecoveryResult, SparseCode, as_frame, as_signal, has_unit_columns

__all__ = ["StopRule", "mp", "omp", "ls_omp"]

# hard safety cap (per column count) when no iteration bound is configured
_FALLBACK_ITER_FACTOR = 10


@dataclass(frozen=True)
class StopRule:
    """Stopping condition shared by the greedy solvers.

    At least one of the three criteria must be set. `residual_tol` is
    relative to ||s||; `max_sparsity` bounds the support size; and
    `max_iterations` bounds the number of selection steps.
    """

    max_sparsity: int | None = None
    residual_tol: float | None = None
    max_iterations: int | None = None

    def __post_init__(self):
        if self.max_sparsity is None and self.residual_tol is None and self.max_iterations is None:
            raise ValueError("stop rule needs max_sparsity, residual_tol, or max_iterations")
        if self.residual_tol is not None and self.residual_tol < 0:
            raise ValueError("residual_tol must be non-negative")

    @classmethod
    def default(cls, n: int) -> "StopRule":
        """Noiseless-recovery default: residual 1e-10 or n selected atoms."""
        return cls(max_sparsity=int(n), residual_tol=1e-10, max_iterations=None)


def _check_inputs(phi, s):
    phi = as_frame(phi)
    s = as_signal(s)
    if s.shape[0] != phi.shape[0]:
        raise ValueError("signal length does not match frame rows")
    if not has_unit_columns(phi):
        raise ValueError("greedy solvers require unit-norm atoms")
    return phi, s


def _iteration_cap(stop: StopRule, m: int) -> int:
    if stop.max_iterations is not None:
        return stop.max_iterations
    return _FALLBACK_ITER_FACTOR * m


def mp(phi, s, stop: StopRule | None = None) -> RecoveryResult:
    """Matching pursuit.

    Repeatedly selects the atom with the largest-magnitude inner product
    against the current residual and subtracts that rank-one component.
    Coefficients accumulate per atom (the same atom may be selected again),
    and the residual norm never increases.
    """
    phi, s = _check_inputs(phi, s)
    n, m = phi.shape
    if stop is None:
        stop = StopRule.default(n)

    s_norm = np.linalg.norm(s)
    coef = np.zeros(m)
    r = s.copy()
    trace = [float(np.linalg.norm(r))]
    cap = _iteration_cap(stop, m)
    converged = s_norm == 0.0
    it = 0
    while not converged and it < cap:
        c = phi.T @ r
        j = int(np.argmax(np.abs(c)))
        coef[j] += c[j]
        r -= c[j] * phi[:, j]
        it += 1
        trace.append(float(np.linalg.norm(r)))
        if stop.residual_tol is not None and trace[-1] <= stop.residual_tol * s_norm:
            converged = True
        if stop.max_sparsity is not None and np.count_nonzero(coef) >= stop.max_sparsity:
            converged = True

    code = SparseCode(coef)
    return RecoveryResult(
        code=code,
        residual_norm=float(np.linalg.norm(phi @ code.values - s)),
        iterations=it,
        converged=converged,
        objective_trace=tuple(trace),
    )


def _restricted_lstsq(phi, support, s):
    """Least squares on the selected atoms; reports rank deficiency.

    Fast path solves the normal equations and verifies them; ill-conditioned
    or rank-deficient supports fall back to the minimum-norm solution.
    """
    sub = phi[:, support]
    gram = sub.T @ sub
    rhs = sub.T @ s
    try:
        x = np.linalg.solve(gram, rhs)
        if np.linalg.norm(gram @ x - rhs) <= 1e-8 * max(1.0, np.linalg.norm(rhs)):
            return x, False
    except np.linalg.LinAlgError:
        pass
    x, _, rank, _ = np.linalg.lstsq(sub, s, rcond=None)
    return x, rank < len(support)


def _omp_values(phi, s, max_sparsity, residual_tol=1e-10):
    """Minimal OMP for batch coding: coefficient vector only, inputs assumed
    validated with unit-norm atoms. Same selection, update, and tie-break
    rules as `omp`."""
    m = phi.shape[1]
    s_norm = np.linalg.norm(s)
    out = np.zeros(m)
    if s_norm == 0.0:
        return out
    support: list[int] = []
    coef = None
    r = s
    tol = residual_tol * s_norm
    for _ in range(min(max_sparsity, m)):
        c = np.abs(phi.T @ r)
        if support:
            c[support] = -1.0
        support.append(int(np.argmax(c)))
        coef, _ = _restricted_lstsq(phi, support, s)
        r = s - phi[:, support] @ coef
        if np.linalg.norm(r) <= tol:
            break
    out[support] = coef
    return out


def _greedy_orthogonal(phi, s, stop, select):
    """Shared OMP/LS-OMP loop; `select` picks the next atom index."""
    m = phi.shape[1]
    s_norm = np.linalg.norm(s)
    support: list[int] = []
    coef_on_support = np.zeros(0)
    r = s.copy()
    trace = [float(np.linalg.norm(r))]
    flags = set()
    cap = min(_iteration_cap(stop, m), m)
    converged = s_norm == 0.0
    it = 0
    while not converged and it < cap and len(support) < m:
        j = select(r, support)
        support.append(j)
        coef_on_support, deficient = _restricted_lstsq(phi, support, s)
        if deficient:
            flags.add("rank_deficient_support")
        r = s - phi[:, support] @ coef_on_support
        it += 1
        trace.append(float(np.linalg.norm(r)))
        if stop.residual_tol is not None and trace[-1] <= stop.residual_tol * s_norm:
            converged = True
        if stop.max_sparsity is not None and len(support) >= stop.max_sparsity:
            converged = True

    coef = np.zeros(m)
    coef[support] = coef_on_support
    code = SparseCode(coef)
    return RecoveryResult(
        code=code,
        residual_norm=float(np.linalg.norm(phi @ code.values - s)),
        iterations=it,
        converged=converged,
        objective_trace=tuple(trace),
        flags=tuple(sorted(flags)),
    )


def omp(phi, s, stop: StopRule | None = None) -> RecoveryResult:
    """Orthogonal matching pursuit.

    Selects the atom most correlated with the residual, then re-fits all
    selected coefficients by least squares, which leaves the residual
    orthogonal to the selected atoms. No atom is ever selected twice.
    """
    phi, s = _check_inputs(phi, s)
    if stop is None:
        stop = StopRule.default(phi.shape[0])

    def select(r, support):
        c = np.abs(phi.T @ r)
        c[support] = -1.0  # already-selected atoms are never re-selected
        return int(np.argmax(c))

    return _greedy_orthogonal(phi, s, stop, select)


def ls_omp(phi, s, stop: StopRule | None = None) -> RecoveryResult:
    """Least-squares OMP (forward stepwise selection).

    Selection solves the full least-squares fit over the current support
    plus each candidate atom and keeps the candidate with the smallest new
    residual; the coefficient update then coincides with OMP's.
    """
    phi, s = _check_inputs(phi, s)
    if stop is None:
        stop = StopRule.default(phi.shape[0])
    m = phi.shape[1]

    def select(r, support):
        taken = set(support)
        best_j = -1
        best_res = np.inf
        for j in range(m):
            if j in taken:
                continue
            x, _ = _restricted_lstsq(phi, support + [j], s)
            res = np.linalg.norm(s - phi[:, support + [j]] @ x)
            if res < best_res:
                best_res = res
                best_j = j
        return best_j

    return _greedy_orthogonal(phi, s, stop, select)
