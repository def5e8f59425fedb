"""Frame-quality measures and recovery-condition checks at desk scale.

Spark, Kruskal rank, restricted isometry constants, and null-space constants
are NP-hard in general; here they are computed exhaustively and guarded by
explicit subset budgets that refuse loudly instead of hanging.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .convex import StandardFormLp, lp_solve
from .core import RecoveryResult, SparseCode, as_frame, as_signal, has_unit_columns

__all__ = [
    "mutual_coherence",
    "welch_bound",
    "babel",
    "spark",
    "krank",
    "gershgorin_spark_bound",
    "ric",
    "nsp_constant",
    "best_k_term_error",
    "exhaustive_p0",
    "frame_bounds",
    "FrameBounds",
    "FrameReport",
    "analyze_frame",
]

_RANK_TOL = 1e-10  # singular values below tol * sigma_max count as zero
_DEFAULT_SUBSET_BUDGET = 1_200_000
_DEFAULT_LP_BUDGET = 50_000


def mutual_coherence(phi) -> float:
    """Largest absolute cosine between two distinct atoms, in [0, 1]."""
    phi = as_frame(phi)
    m = phi.shape[1]
    if m < 2:
        raise ValueError("mutual coherence needs at least two atoms")
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("frame contains a zero column")
    g = np.abs((phi / norms).T @ (phi / norms))
    iu = np.triu_indices(m, k=1)
    return float(min(g[iu].max(), 1.0))


def welch_bound(n: int, m: int) -> float:
    """Lower bound sqrt((m-n)/(n(m-1))) on the coherence of unit-norm frames."""
    if n < 1 or m < n:
        raise ValueError("welch bound requires m >= n >= 1")
    if m < 2:
        raise ValueError("welch bound requires m >= 2")
    return math.sqrt((m - n) / (n * (m - 1)))


def babel(phi, p: int) -> float:
    """Cumulative coherence: worst total |cosine| of any p atoms against one other.

    Exact for any size, since the inner maximum over index sets is attained
    by the p largest Gram magnitudes in each column.
    """
    phi = as_frame(phi)
    m = phi.shape[1]
    if not has_unit_columns(phi):
        raise ValueError("babel function requires unit-norm atoms")
    if not 1 <= p <= m - 1:
        raise ValueError("p must lie in [1, m-1]")
    g = np.abs(phi.T @ phi)
    np.fill_diagonal(g, 0.0)
    g.sort(axis=0)  # ascending per column
    return float(g[-p:, :].sum(axis=0).max())


def _dependent(sub: np.ndarray) -> bool:
    svals = np.linalg.svd(sub, compute_uv=False)
    if svals[0] == 0.0:
        return True
    return bool(svals[-1] <= _RANK_TOL * svals[0])


def _smallest_dependent_size(phi: np.ndarray, subset_budget: int) -> int:
    """Smallest cardinality of a linearly dependent column subset.

    Returns m + 1 when every subset (hence the whole frame, if m <= n) is
    independent; for m > n the answer never exceeds n + 1.
    """
    n, m = phi.shape
    max_size = min(n, m)
    planned = sum(math.comb(m, j) for j in range(1, max_size + 1))
    if planned > subset_budget:
        raise ValueError(
            f"exhaustive spark search needs {planned} subsets, over the budget of {subset_budget}"
        )
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(range(m), size):
            if _dependent(phi[:, subset]):
                return size
    # all subsets up to min(n, m) are independent
    return n + 1 if m > n else m + 1


def spark(phi, subset_budget: int = _DEFAULT_SUBSET_BUDGET) -> int:
    """Smallest number of linearly dependent columns (m + 1 if none exist)."""
    return _smallest_dependent_size(as_frame(phi), subset_budget)


def krank(phi, subset_budget: int = _DEFAULT_SUBSET_BUDGET) -> int:
    """Largest k such that every k columns are linearly independent."""
    return _smallest_dependent_size(as_frame(phi), subset_budget) - 1


def gershgorin_spark_bound(phi) -> float:
    """Coherence-based lower bound 1 + 1/mu on the spark (inf when mu = 0)."""
    mu = mutual_coherence(phi)
    if mu == 0.0:
        return math.inf
    return 1.0 + 1.0 / mu


def ric(phi, k: int, subset_budget: int = _DEFAULT_SUBSET_BUDGET) -> float:
    """Restricted isometry constant of order k.

    Maximal operator-norm distortion ||phi_S.T phi_S - I|| over all column
    subsets of size at most k, evaluated through the eigenvalues of Gram
    submatrices.
    """
    phi = as_frame(phi)
    m = phi.shape[1]
    if not 1 <= k <= m:
        raise ValueError("order k must lie in [1, m]")
    planned = sum(math.comb(m, j) for j in range(1, k + 1))
    if planned > subset_budget:
        raise ValueError(
            f"exhaustive RIC of order {k} needs {planned} subsets, over the budget of {subset_budget}"
        )
    gram = phi.T @ phi
    delta = 0.0
    for size in range(1, k + 1):
        for subset in itertools.combinations(range(m), size):
            ix = np.array(subset)
            eigs = np.linalg.eigvalsh(gram[np.ix_(ix, ix)])
            delta = max(delta, float(np.abs(eigs - 1.0).max()))
    return delta


def _kernel_rank(phi: np.ndarray) -> int:
    svals = np.linalg.svd(phi, compute_uv=False)
    if svals[0] == 0.0:
        return phi.shape[1]
    return phi.shape[1] - int(np.sum(svals > _RANK_TOL * svals[0]))


def nsp_constant(phi, k: int, lp_budget: int = _DEFAULT_LP_BUDGET) -> float:
    """Smallest gamma with ||z_S||_1 <= gamma ||z_Sc||_1 for kernel z, |S| <= k.

    Solved exactly: for each support S and sign pattern on S, a linear
    program maximizes the signed sum of z_S over the kernel subject to
    ||z_Sc||_1 <= 1 (the l1 norm split into non-negative parts). Supports of
    size exactly k dominate smaller ones, so only those are enumerated.
    Returns 0 for a trivial kernel and +inf when some LP is unbounded (a
    k-sparse kernel vector exists, so no finite constant works).
    """
    phi = as_frame(phi)
    n, m = phi.shape
    if not 1 <= k <= m:
        raise ValueError("order k must lie in [1, m]")
    if _kernel_rank(phi) == 0:
        return 0.0
    if k >= m:
        return math.inf
    planned = math.comb(m, k) * (1 << max(k - 1, 0))
    if planned > lp_budget:
        raise ValueError(
            f"exact NSP constant of order {k} needs {planned} LPs, over the budget of {lp_budget}"
        )

    gamma = 0.0
    kernel_rows = np.hstack([phi, -phi, np.zeros((n, 1))])
    for subset in itertools.combinations(range(m), k):
        comp = np.setdiff1d(np.arange(m), subset)
        budget_row = np.zeros(2 * m + 1)
        budget_row[comp] = 1.0
        budget_row[m + comp] = 1.0
        budget_row[-1] = 1.0
        mat = np.vstack([kernel_rows, budget_row])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        # z <-> -z symmetry: the first support sign can be fixed to +1
        for bits in range(1 << (k - 1)):
            signs = np.ones(k)
            for pos in range(k - 1):
                if bits >> pos & 1:
                    signs[pos + 1] = -1.0
            c = np.zeros(2 * m + 1)
            c[list(subset)] = -signs
            c[[m + j for j in subset]] = signs
            sol = lp_solve(StandardFormLp(c=c, m=mat, b=b))
            if sol.status == "unbounded":
                return math.inf
            if sol.status != "optimal":
                raise RuntimeError(f"NSP linear program failed with status {sol.status!r}")
            gamma = max(gamma, -sol.objective)
    return gamma


def best_k_term_error(s, k: int, p: float) -> float:
    """lp error of the best k-term approximation (largest magnitudes kept,
    ties keeping the lowest index)."""
    s = as_signal(s)
    if not 0 <= k <= s.shape[0]:
        raise ValueError("k must lie in [0, len(s)]")
    if p <= 0:
        raise ValueError("p must be positive")
    if k == s.shape[0]:
        return 0.0
    order = np.argsort(-np.abs(s), kind="stable")
    tail = np.abs(s[order[k:]])
    return float(np.sum(tail**p) ** (1.0 / p))


def exhaustive_p0(phi, s, k_max: int, support_budget: int = 1_000_000) -> RecoveryResult:
    """Sparsest-fit oracle by exhaustive support enumeration.

    Examines every support of size at most `k_max` in size-then-lexicographic
    order and keeps the least-squares fit with the strictly smallest residual,
    so ties prefer the smaller, lexicographically first support. The result
    carries the ``exact`` flag when the best residual is zero to tolerance.
    `iterations` counts the supports examined.
    """
    phi = as_frame(phi)
    s = as_signal(s)
    n, m = phi.shape
    if s.shape[0] != n:
        raise ValueError("signal length does not match frame rows")
    if not 0 <= k_max <= m:
        raise ValueError("k_max must lie in [0, m]")
    planned = sum(math.comb(m, j) for j in range(k_max + 1))
    if planned > support_budget:
        raise ValueError(
            f"exhaustive search needs {planned} supports, over the budget of {support_budget}"
        )

    best_res = float(np.linalg.norm(s))
    best_support: tuple[int, ...] = ()
    best_coef = np.zeros(0)
    tested = 1
    for size in range(1, k_max + 1):
        for subset in itertools.combinations(range(m), size):
            sub = phi[:, subset]
            coef, _, _, _ = np.linalg.lstsq(sub, s, rcond=None)
            res = float(np.linalg.norm(s - sub @ coef))
            tested += 1
            if res < best_res:
                best_res = res
                best_support = subset
                best_coef = coef

    alpha = np.zeros(m)
    if best_support:
        alpha[list(best_support)] = best_coef
    code = SparseCode(alpha)
    residual = float(np.linalg.norm(phi @ code.values - s))
    exact = residual <= 1e-10 * max(1.0, float(np.linalg.norm(s)))
    return RecoveryResult(
        code=code,
        residual_norm=residual,
        iterations=tested,
        converged=True,
        flags=("exact",) if exact else (),
    )


class FrameBounds(NamedTuple):
    a: float
    b: float
    tight: bool
    parseval: bool
    etf: bool


def frame_bounds(phi) -> FrameBounds:
    """Frame bounds (squared extreme singular values) and tightness flags.

    a and b satisfy a ||x||^2 <= ||phi.T x||^2 <= b ||x||^2 for all x. A
    rank-deficient frame gets a = 0 with a warning. The ETF flag additionally
    requires unit-norm atoms whose pairwise |cosines| all equal the Welch
    bound to 1e-8.
    """
    phi = as_frame(phi)
    n, m = phi.shape
    svals = np.linalg.svd(phi, compute_uv=False)
    b = float(svals[0] ** 2)
    if m < n or svals[min(n, m) - 1] <= _RANK_TOL * max(svals[0], 1e-300):
        warnings.warn("frame is not full row rank; lower frame bound is zero", stacklevel=2)
        a = 0.0
    else:
        a = float(svals[n - 1] ** 2)
    tight = bool(abs(a - b) <= 1e-10 * b) if b > 0 else False
    parseval = bool(tight and abs(a - 1.0) <= 1e-10)
    etf = False
    if m >= max(n, 2) and has_unit_columns(phi, tol=1e-10) and tight:
        theta = welch_bound(n, m)
        g = np.abs(phi.T @ phi)
        iu = np.triu_indices(m, k=1)
        etf = bool(np.all(np.abs(g[iu] - theta) <= 1e-8))
    return FrameBounds(a=a, b=b, tight=tight, parseval=parseval, etf=etf)


@dataclass(frozen=True)
class FrameReport:
    """Bundle of the frame-quality measures, JSON-serializable."""

    coherence: float
    welch: float | None
    bounds: FrameBounds
    spark_value: int | None
    krank_value: int | None
    gershgorin: float
    ric_table: dict[int, float]
    nsp_table: dict[int, float]
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "coherence": self.coherence,
            "welch_bound": self.welch,
            "frame_bounds": {"a": self.bounds.a, "b": self.bounds.b},
            "flags": {
                "tight": self.bounds.tight,
                "parseval": self.bounds.parseval,
                "etf": self.bounds.etf,
            },
            "spark": self.spark_value,
            "krank": self.krank_value,
            "gershgorin_bound": self.gershgorin,
            "ric": {str(k): v for k, v in sorted(self.ric_table.items())},
            "nsp": {str(k): v for k, v in sorted(self.nsp_table.items())},
            "notes": list(self.notes),
        }


def analyze_frame(
    phi,
    ric_orders=(1, 2, 3),
    nsp_orders=(1, 2),
    subset_budget: int = _DEFAULT_SUBSET_BUDGET,
    lp_budget: int = _DEFAULT_LP_BUDGET,
) -> FrameReport:
    """Compute the full frame report, skipping measures whose exhaustive
    search would exceed its budget (each skip is recorded in `notes`)."""
    phi = as_frame(phi)
    n, m = phi.shape
    notes = []

    coherence = mutual_coherence(phi)
    welch = welch_bound(n, m) if m >= max(n, 2) else None
    bounds = frame_bounds(phi)
    gershgorin = gershgorin_spark_bound(phi)

    spark_value = krank_value = None
    try:
        spark_value = spark(phi, subset_budget)
        krank_value = spark_value - 1
    except ValueError as exc:
        notes.append(str(exc))

    ric_table = {}
    for k in ric_orders:
        if k > m:
            continue
        try:
            ric_table[int(k)] = ric(phi, int(k), subset_budget)
        except ValueError as exc:
            notes.append(str(exc))
            break

    nsp_table = {}
    for k in nsp_orders:
        if k > m:
            continue
        try:
            nsp_table[int(k)] = nsp_constant(phi, int(k), lp_budget)
        except ValueError as exc:
            notes.append(str(exc))
            break

    return FrameReport(
        coherence=coherence,
        welch=welch,
        bounds=bounds,
        spark_value=spark_value,
        krank_value=krank_value,
        gershgorin=gershgorin,
        ric_table=ric_table,
        nsp_table=nsp_table,
        notes=tuple(notes),
    )
