"""L1 convex machinery: basis pursuit via linear programming, BPDN/lasso and
elastic net via cyclic coordinate descent.

The penalized objective convention throughout is ||phi a - s||_2^2 + penalty
(no 1/2 factor on the data term), and all KKT formulas follow from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RecoveryResult, SparseCode, as_frame, as_signal

__all__ = [
    "StandardFormLp",
    "LpSolution",
    "LassoConfig",
    "lp_solve",
    "bp_formulate",
    "extract_bp_solution",
    "basis_pursuit",
    "bpdn_lasso",
    "elastic_net",
    "soft_threshold",
]


@dataclass(frozen=True)
class StandardFormLp:
    """min c.T x  subject to  M x = b, x >= 0.

    `layout` maps named variable blocks to half-open column ranges so a
    solution vector can be mapped back to the original problem variables.
    """

    c: np.ndarray
    m: np.ndarray
    b: np.ndarray
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m.shape != (self.b.shape[0], self.c.shape[0]):
            raise ValueError("inconsistent LP dimensions")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded | iteration_limit
    alternate_optima: bool
    iterations: int


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _build_tableau(a, b, c, basis):
    """Tableau [B^-1 a | B^-1 b; reduced costs | -objective] for a basis."""
    bmat = a[:, basis]
    try:
        inv_a = np.linalg.solve(bmat, a)
        inv_b = np.linalg.solve(bmat, b)
    except np.linalg.LinAlgError:
        inv_a = np.linalg.lstsq(bmat, a, rcond=None)[0]
        inv_b = np.linalg.lstsq(bmat, b, rcond=None)[0]
    tableau = np.empty((a.shape[0] + 1, a.shape[1] + 1))
    tableau[:-1, :-1] = inv_a
    tableau[:-1, -1] = inv_b
    tableau[-1, :-1] = c - c[basis] @ inv_a
    tableau[-1, -1] = -float(c[basis] @ inv_b)
    return tableau


def _run_simplex(a, b, c, basis, tol, max_iter, stall_limit=30, refactor_every=250):
    """Primal simplex over columns of `a` starting from a basic feasible basis.

    Entering rule: most negative reduced cost, switching to Bland's
    lowest-index anti-cycling rule after `stall_limit` consecutive
    non-improving pivots. The tableau is refactorized from the exact data
    every `refactor_every` pivots (and whenever the objective regresses,
    which only roundoff can cause), so accumulated pivot error cannot make
    the iteration churn. Returns (status, iterations, tableau, basis).
    """
    tableau = _build_tableau(a, b, c, basis)
    it = 0
    stall = 0
    since_refactor = 0
    bland = False
    last_obj = tableau[-1, -1]  # equals minus the current objective value
    while it < max_iter:
        reduced = tableau[-1, :-1]
        if bland:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return "optimal", it, tableau, basis
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -tol:
                return "optimal", it, tableau, basis
        column = tableau[:-1, col]
        positive = column > tol
        if not np.any(positive):
            return "unbounded", it, tableau, basis
        ratios = np.full(column.shape, np.inf)
        ratios[positive] = tableau[:-1, -1][positive] / column[positive]
        min_ratio = ratios.min()
        rows = np.flatnonzero(ratios <= min_ratio + tol)
        if bland:
            # Bland tie-break on the leaving variable: smallest basis index
            row = int(rows[np.argmin(basis[rows])])
        else:
            # stability tie-break: largest pivot element
            row = int(rows[np.argmax(column[rows])])
        _pivot(tableau, basis, row, col)
        it += 1
        since_refactor += 1
        obj = tableau[-1, -1]
        if obj > last_obj + tol:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= stall_limit:
                bland = True
        if obj < last_obj - 10 * tol or since_refactor >= refactor_every:
            tableau = _build_tableau(a, b, c, basis)
            obj = tableau[-1, -1]
            since_refactor = 0
        last_obj = obj
    return "iteration_limit", it, tableau, basis


def lp_solve(
    lp: StandardFormLp,
    tol: float = 1e-9,
    max_iterations: int | None = None,
    degeneracy_eps: float = 1e-7,
) -> LpSolution:
    """Two-phase primal simplex with Bland's anti-cycling rule.

    Returns an optimal basic feasible solution, or an explicit
    infeasible/unbounded status. `alternate_optima` is set when some
    non-basic variable has a zero reduced cost at the optimum (the optimal
    vertex is then not unique, up to degeneracy).

    Highly degenerate vertices (common when the optimum is very sparse) are
    handled by perturbing the right-hand side with a deterministic, strictly
    decreasing epsilon vector scaled by `degeneracy_eps`, which removes
    ratio-test ties; the returned solution is re-solved against the exact
    right-hand side, so the perturbation never leaks into the result.
    """
    n_rows, n_cols = lp.m.shape
    if max_iterations is None:
        max_iterations = 200 * (n_rows + n_cols)

    m = lp.m.copy()
    b_exact = lp.b.astype(np.float64).copy()
    flip = b_exact < 0
    m[flip] *= -1.0
    b_exact[flip] *= -1.0
    b = b_exact
    pert_total = 0.0
    if degeneracy_eps > 0.0:
        pert = degeneracy_eps * max(1.0, float(np.abs(b_exact).max())) * np.power(0.9, np.arange(n_rows))
        pert_total = float(pert.sum())
        b = b_exact + pert

    # Phase 1: minimize the sum of one artificial variable per row.
    a1 = np.hstack([m, np.eye(n_rows)])
    c1 = np.concatenate([np.zeros(n_cols), np.ones(n_rows)])
    basis = np.arange(n_cols, n_cols + n_rows)
    status, it1, tableau, basis = _run_simplex(a1, b, c1, basis, tol, max_iterations)
    if status != "optimal":
        return LpSolution(np.zeros(n_cols), np.nan, "iteration_limit", False, it1)
    scale = 1.0 + np.abs(b).max()
    if -tableau[-1, -1] > tol * scale + pert_total:
        return LpSolution(np.zeros(n_cols), np.nan, "infeasible", False, it1)

    # Drive remaining artificials out of the basis (they sit at level ~0);
    # rows where no original column can pivot are redundant and dropped.
    keep_rows = []
    for row in range(n_rows):
        if basis[row] >= n_cols:
            pivot_cols = np.flatnonzero(np.abs(tableau[row, :n_cols]) > tol)
            if pivot_cols.size:
                _pivot(tableau, basis, row, int(pivot_cols[0]))
                keep_rows.append(row)
        else:
            keep_rows.append(row)

    rows = np.array(keep_rows, dtype=int)
    a2 = m[rows]
    b2 = b[rows]
    basis = basis[rows]
    status, it2, tableau, basis = _run_simplex(a2, b2, lp.c, basis, tol, max_iterations)
    iterations = it1 + it2
    if status != "optimal":
        return LpSolution(np.zeros(n_cols), np.nan, status, False, iterations)

    x = np.zeros(n_cols)
    # optimality of a basis does not depend on b: re-solve against the exact
    # right-hand side to strip the anti-degeneracy perturbation and any
    # remaining pivot drift (degenerate entries may come back as -0ish)
    values = np.linalg.lstsq(m[:, basis], b_exact, rcond=None)[0]
    values[np.abs(values) <= tol * scale] = 0.0
    values = np.maximum(values, 0.0)
    x[basis] = values
    objective = float(lp.c @ x)
    nonbasic = np.setdiff1d(np.arange(n_cols), basis, assume_unique=False)
    alternate = bool(np.any(np.abs(tableau[-1, nonbasic]) <= tol)) if nonbasic.size else False
    return LpSolution(x, objective, "optimal", alternate, iterations)


def bp_formulate(phi, s) -> StandardFormLp:
    """Reduce min ||a||_1 s.t. phi a = s to a standard-form LP.

    The l1 objective becomes linear through bound variables t with
    a_i - t_i <= 0 and -a_i - t_i <= 0; the free variables are split into
    non-negative parts (a = ap - am, t = tp - tm) and the 2m inequalities get
    slack variables, giving the block layout
    (ap, tp, am, tm, slack_pos, slack_neg) with 6m non-negative variables.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    n, m = phi.shape
    if s.shape[0] != n:
        raise ValueError("signal length does not match frame rows")

    eye = np.eye(m)
    zero = np.zeros((m, m))
    # rows 0..m-1:   (ap - am) - (tp - tm) + slack_pos = 0
    # rows m..2m-1: -(ap - am) - (tp - tm) + slack_neg = 0
    top = np.hstack([eye, -eye, -eye, eye, eye, zero])
    mid = np.hstack([-eye, -eye, eye, eye, zero, eye])
    bot = np.hstack([phi, np.zeros((n, m)), -phi, np.zeros((n, 3 * m))])
    mat = np.vstack([top, mid, bot])
    b = np.concatenate([np.zeros(2 * m), s])
    c = np.zeros(6 * m)
    c[m:2 * m] = 1.0
    c[3 * m:4 * m] = -1.0
    layout = {
        "alpha_plus": (0, m),
        "t_plus": (m, 2 * m),
        "alpha_minus": (2 * m, 3 * m),
        "t_minus": (3 * m, 4 * m),
        "slack_pos": (4 * m, 5 * m),
        "slack_neg": (5 * m, 6 * m),
    }
    return StandardFormLp(c=c, m=mat, b=b, layout=layout)


def extract_bp_solution(lp: StandardFormLp, x: np.ndarray) -> np.ndarray:
    """Map an LP solution vector back to the l1 problem variable a."""
    lo, hi = lp.layout["alpha_plus"]
    ap = x[lo:hi]
    lo, hi = lp.layout["alpha_minus"]
    am = x[lo:hi]
    return ap - am


def basis_pursuit(phi, s) -> RecoveryResult:
    """l1-minimal solution of phi a = s, solved exactly by primal simplex.

    Uses the positive/negative split a = ap - am (the compact form of the
    same reduction behind `bp_formulate`; equality rows only, which keeps the
    tableau small). Raises if `s` is not in the range of `phi`. The
    ``alternate_optima`` flag is set when the simplex certifies that the
    optimal vertex is not unique.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    n, m = phi.shape
    if s.shape[0] != n:
        raise ValueError("signal length does not match frame rows")

    s_scale = np.linalg.norm(s)
    if s_scale == 0.0:
        return RecoveryResult(SparseCode(np.zeros(m)), 0.0, 0, True, (0.0,))

    lp = StandardFormLp(
        c=np.ones(2 * m),
        m=np.hstack([phi, -phi]),
        b=s / s_scale,
        layout={"alpha_plus": (0, m), "alpha_minus": (m, 2 * m)},
    )
    sol = lp_solve(lp)
    if sol.status == "infeasible":
        raise ValueError("signal is not in the span of the frame")
    if sol.status != "optimal":
        raise ValueError(f"linear program failed with status {sol.status!r}")

    alpha = extract_bp_solution(lp, sol.x) * s_scale
    # at an exact vertex the off-basis entries are zero; remove float dust
    # left by the ap/am cancellation so the support is the vertex support
    peak = np.abs(alpha).max()
    if peak > 0.0:
        alpha[np.abs(alpha) <= 1e-9 * peak] = 0.0
    code = SparseCode(alpha)
    flags = ("alternate_optima",) if sol.alternate_optima else ()
    return RecoveryResult(
        code=code,
        residual_norm=float(np.linalg.norm(phi @ alpha - s)),
        iterations=sol.iterations,
        converged=True,
        objective_trace=(float(np.abs(alpha).sum()),),
        flags=flags,
    )


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass(frozen=True)
class LassoConfig:
    """Penalty weight and coordinate-descent controls.

    `mix` interpolates the penalty: lam * [0.5*(1-mix)*||a||_2^2 +
    mix*||a||_1]; mix = 1 is the pure l1 (BPDN/lasso) case.
    """

    lam: float
    mix: float = 1.0
    max_sweeps: int = 1000
    kkt_tol: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if not 0.0 <= self.mix <= 1.0:
            raise ValueError("mix must lie in [0, 1]")
        if self.kkt_tol <= 0:
            raise ValueError("kkt_tol must be positive")


def _kkt_violation(phi, s, alpha, lam, mix):
    grad = 2.0 * (phi.T @ (phi @ alpha - s)) + lam * (1.0 - mix) * alpha
    on = alpha != 0.0
    viol = np.where(
        on,
        np.abs(grad + lam * mix * np.sign(alpha)),
        np.maximum(np.abs(grad) - lam * mix, 0.0),
    )
    return float(viol.max()) if viol.size else 0.0


def _coordinate_descent(phi, s, cfg: LassoConfig, warm_start=None):
    phi = as_frame(phi)
    s = as_signal(s)
    n, m = phi.shape
    lam, mix = cfg.lam, cfg.mix
    col_sq = np.einsum("ij,ij->j", phi, phi)
    denom = col_sq + lam * (1.0 - mix) / 2.0
    thresh = lam * mix / 2.0

    alpha = np.zeros(m) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    r = s - phi @ alpha
    objective = []
    converged = False
    sweeps = 0
    while sweeps < cfg.max_sweeps:
        moved = False
        for j in range(m):
            if denom[j] == 0.0:
                continue
            aj = alpha[j]
            c = phi[:, j] @ r + col_sq[j] * aj
            new = soft_threshold(c, thresh) / denom[j]
            if new != aj:
                r += (aj - new) * phi[:, j]
                alpha[j] = new
                moved = True
        sweeps += 1
        res = float(r @ r)
        objective.append(res + lam * ((1.0 - mix) / 2.0 * float(alpha @ alpha) + mix * float(np.abs(alpha).sum())))
        if _kkt_violation(phi, s, alpha, lam, mix) <= cfg.kkt_tol:
            converged = True
            break
        if not moved:
            # exact coordinate-wise fixed point: no later sweep can move either
            break

    code = SparseCode(alpha)
    return RecoveryResult(
        code=code,
        residual_norm=float(np.linalg.norm(phi @ alpha - s)),
        iterations=sweeps,
        converged=converged,
        objective_trace=tuple(objective),
    )


def bpdn_lasso(phi, s, cfg: LassoConfig, warm_start=None) -> RecoveryResult:
    """Cyclic coordinate descent for min ||phi a - s||_2^2 + lam * ||a||_1.

    Each coordinate update is the exact soft-threshold minimizer; sweeps run
    in index order until every KKT residual is within `kkt_tol` (for a_j != 0,
    |2 phi_j.T(phi a - s) + lam sign(a_j)| <= tol; for a_j = 0 the gradient
    magnitude may exceed lam by at most tol). The per-sweep objective trace
    is non-increasing.
    """
    cfg = LassoConfig(lam=cfg.lam, mix=1.0, max_sweeps=cfg.max_sweeps, kkt_tol=cfg.kkt_tol)
    return _coordinate_descent(phi, s, cfg, warm_start)


def elastic_net(phi, s, cfg: LassoConfig, warm_start=None) -> RecoveryResult:
    """Coordinate descent for the mixed l1/l2 penalty (strictly convex for
    mix < 1 and lam > 0); with mix = 1 the output is identical to
    `bpdn_lasso` at the same lam."""
    if cfg.lam <= 0 and cfg.mix < 1.0:
        raise ValueError("elastic net requires lam > 0")
    return _coordinate_descent(phi, s, cfg, warm_start)
