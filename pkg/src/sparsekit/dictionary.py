"""Dictionary learning by the alternating scheme: sparse coding plus a
dictionary update (MOD, K-SVD, or the Procrustes-rotation R-SVD), with the
reconstruction-quality and atom-recovery metrics used to evaluate them.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, as_frame
from .greedy import StopRule, _omp_values, omp

__all__ = [
    "LearnConfig",
    "LearnTrace",
    "sparse_coding_step",
    "mod_update",
    "ksvd_update",
    "rsvd_update",
    "learn",
    "e_snr",
    "atom_recovery_count",
]

log = logging.getLogger(__name__)

_ESNR_SENTINEL = 300.0
_ALGORITHMS = ("mod", "ksvd", "rsvd")


def default_coder(phi, s, k):
    """k-sparse OMP coding used when a config does not name a coder."""
    return omp(phi, s, StopRule(max_sparsity=k, residual_tol=1e-10))


@dataclass(frozen=True)
class LearnConfig:
    """Shape and schedule of one dictionary-learning run."""

    m: int
    k: int
    iterations: int
    algorithm: str = "ksvd"
    group_size: int = 5
    coder: object = None  # callable(phi, s, k) -> RecoveryResult
    rng: RngStream = field(default_factory=lambda: RngStream(0))

    def __post_init__(self):
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"algorithm must be one of {_ALGORITHMS}")
        if self.m < 2 or self.k < 1 or self.iterations < 0 or self.group_size < 1:
            raise ValueError("invalid learning configuration")


@dataclass(frozen=True)
class LearnTrace:
    """Per-iteration record of a learning run.

    `esnr` is measured after each dictionary update; `pre_update_error` and
    `post_update_error` hold the Frobenius reconstruction error around every
    update step (the update must never increase it). Wall-clock seconds stay
    in memory only and are never serialized.
    """

    esnr: tuple[float, ...]
    dictionary: np.ndarray
    code: np.ndarray
    pre_update_error: tuple[float, ...]
    post_update_error: tuple[float, ...]
    seconds_per_iteration: tuple[float, ...]


def e_snr(y, d, x) -> float:
    """Reconstruction quality 20 log10(||Y||_F / ||Y - D X||_F) in dB,
    capped at the +300 sentinel (exact fits would be infinite)."""
    y = np.asarray(y, dtype=float)
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        raise ValueError("training matrix must be non-zero")
    err = float(np.linalg.norm(y - np.asarray(d) @ np.asarray(x)))
    if err == 0.0:
        return _ESNR_SENTINEL
    return min(20.0 * math.log10(y_norm / err), _ESNR_SENTINEL)


def sparse_coding_step(d, y, k, coder=None) -> np.ndarray:
    """Code every training column with at most k atoms of `d`.

    The default coder is OMP stopped at k atoms or residual 1e-10 (run
    through its batch fast path). A coder failure on a column leaves that
    column zero and logs a warning.
    """
    d = as_frame(d, "dictionary")
    y = as_frame(y, "training set")
    x = np.zeros((d.shape[1], y.shape[1]))
    for i in range(y.shape[1]):
        try:
            if coder is None:
                x[:, i] = _omp_values(d, y[:, i], k)
            else:
                x[:, i] = coder(d, y[:, i], k).code.values
        except Exception as exc:  # noqa: BLE001 - a bad column must not kill the run
            log.warning("coder failed on column %d: %s", i, exc)
    return x


def _worst_example_queue(y, d, x):
    """Training columns sorted by descending representation error."""
    resid = np.linalg.norm(y - d @ x, axis=0)
    return list(np.argsort(-resid, kind="stable"))


def mod_update(d, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Method-of-optimal-directions update: D' = Y pinv(X).

    The global least-squares optimum over D, followed by column
    renormalization with the rows of X rescaled inversely so the product
    D' X' is unchanged. Atoms whose X row is all zero carry no information
    and are re-seeded from the worst-represented training columns.
    """
    d = as_frame(d, "dictionary")
    x = np.asarray(x, dtype=float)
    y = as_frame(y, "training set")

    d_new = y @ np.linalg.pinv(x)
    x_new = x.copy()
    norms = np.linalg.norm(d_new, axis=0)
    dead = [j for j in range(d.shape[1]) if not np.any(x[j]) or norms[j] == 0.0]
    if dead:
        queue = _worst_example_queue(y, d, x)
        for j, col in zip(dead, queue):
            d_new[:, j] = y[:, col] / np.linalg.norm(y[:, col])
            x_new[j] = 0.0
        norms = np.linalg.norm(d_new, axis=0)

    d_new /= norms
    x_new *= norms[:, None]
    return d_new, x_new


def ksvd_update(d, x, y) -> tuple[np.ndarray, np.ndarray]:
    """K-SVD update: sequential rank-one refits of every atom.

    For atom h, the error matrix restricted to the examples that use it is
    approximated by its top singular pair: the atom becomes u1 and the
    corresponding coefficient row sigma1 * v1, so column supports never grow.
    Atoms used by no example are re-seeded from the worst-represented
    training columns (their coefficient row stays zero).
    """
    d = as_frame(d, "dictionary").copy()
    x = np.asarray(x, dtype=float).copy()
    y = as_frame(y, "training set")
    m = d.shape[1]

    residual = y - d @ x  # maintained across atom updates
    reseed_queue = None
    for h in range(m):
        omega = np.flatnonzero(x[h])
        if omega.size == 0:
            if reseed_queue is None:
                resid_norms = np.linalg.norm(residual, axis=0)
                reseed_queue = list(np.argsort(-resid_norms, kind="stable"))
            col = reseed_queue.pop(0)
            d[:, h] = y[:, col] / np.linalg.norm(y[:, col])
            continue
        err = residual[:, omega] + np.outer(d[:, h], x[h, omega])
        u, svals, vt = np.linalg.svd(err, full_matrices=False)
        d[:, h] = u[:, 0]
        x[h, omega] = svals[0] * vt[0]
        residual[:, omega] = err - np.outer(d[:, h], x[h, omega])
    return d, x


def rsvd_update(d, x, y, group_size: int = 5) -> np.ndarray:
    """Rotation update: orthogonal Procrustes fit per atom group.

    Atoms are ordered by ascending popularity (l0 norm of their coefficient
    row, ties keeping the lower index) and split into consecutive groups of
    `group_size` (the last group may be smaller). Each group is rotated by
    the orthogonal matrix closest to mapping its contribution H = D_I X_I
    onto the group's error matrix E, obtained from the polar factor of
    E H^T; groups whose atoms are entirely unused are skipped. Rotations
    keep atoms unit-norm, so no renormalization happens, and the
    reconstruction error never increases.
    """
    d = as_frame(d, "dictionary").copy()
    x = np.asarray(x, dtype=float)
    y = as_frame(y, "training set")
    m = d.shape[1]

    popularity = np.count_nonzero(x, axis=1)
    order = np.argsort(popularity, kind="stable")
    residual = y - d @ x
    for start in range(0, m, group_size):
        group = order[start:start + group_size]
        x_g = x[group]
        if not np.any(x_g):
            continue
        d_g = d[:, group]
        # E H^T expanded as (residual + H) H^T with H = D_g X_g, computed
        # through the small s x s and n x s products
        rx = residual @ x_g.T
        xx = x_g @ x_g.T
        m_svd = (rx + d_g @ xx) @ d_g.T
        u, _, vt = np.linalg.svd(m_svd)
        rot = u @ vt
        d_new_g = rot @ d_g
        residual = residual + (d_g - d_new_g) @ x_g
        d[:, group] = d_new_g
    return d


def learn(y, cfg: LearnConfig) -> LearnTrace:
    """Alternate sparse coding and dictionary updates for cfg.iterations.

    The dictionary starts from cfg.m distinct training columns drawn from
    cfg.rng and normalized. With iterations = 0 the trace holds the
    reconstruction quality of coding against that initial dictionary.
    """
    y = as_frame(y, "training set")
    n, n_examples = y.shape
    if np.any(np.linalg.norm(y, axis=0) == 0.0):
        raise ValueError("training set contains an all-zero column")
    if n_examples < cfg.m:
        raise ValueError("need at least m training columns")
    if not cfg.k < n < cfg.m:
        raise ValueError("learning requires k < n < m")
    coder = cfg.coder or default_coder

    g = cfg.rng.generator()
    picks = g.choice(n_examples, size=cfg.m, replace=False)
    d = y[:, picks] / np.linalg.norm(y[:, picks], axis=0)

    esnr_trace: list[float] = []
    pre_errors: list[float] = []
    post_errors: list[float] = []
    seconds: list[float] = []

    if cfg.iterations == 0:
        x = sparse_coding_step(d, y, cfg.k, coder)
        return LearnTrace((e_snr(y, d, x),), d, x, (), (), ())

    y_norm = float(np.linalg.norm(y))
    x = np.zeros((cfg.m, n_examples))
    for _ in range(cfg.iterations):
        tic = time.perf_counter()
        x = sparse_coding_step(d, y, cfg.k, coder)
        pre_errors.append(float(np.linalg.norm(y - d @ x)))
        if cfg.algorithm == "mod":
            d, x = mod_update(d, x, y)
        elif cfg.algorithm == "ksvd":
            d, x = ksvd_update(d, x, y)
        else:
            d = rsvd_update(d, x, y, cfg.group_size)
        post = float(np.linalg.norm(y - d @ x))
        post_errors.append(post)
        if post == 0.0:
            esnr_trace.append(_ESNR_SENTINEL)
        else:
            esnr_trace.append(min(20.0 * math.log10(y_norm / post), _ESNR_SENTINEL))
        seconds.append(time.perf_counter() - tic)

    return LearnTrace(
        esnr=tuple(esnr_trace),
        dictionary=d,
        code=x,
        pre_update_error=tuple(pre_errors),
        post_update_error=tuple(post_errors),
        seconds_per_iteration=tuple(seconds),
    )


def _max_bipartite_matching(adjacency: np.ndarray) -> int:
    """Maximum matching size on a boolean matrix via augmenting paths."""
    n_rows, n_cols = adjacency.shape
    owner = [-1] * n_cols

    def augment(i, seen):
        for j in range(n_cols):
            if adjacency[i, j] and not seen[j]:
                seen[j] = True
                if owner[j] == -1 or augment(owner[j], seen):
                    owner[j] = i
                    return True
        return False

    matched = 0
    for i in range(n_rows):
        if augment(i, [False] * n_cols):
            matched += 1
    return matched


def atom_recovery_count(d_true, d_learned, eps: float = 0.01) -> int:
    """Number of true atoms recovered up to sign and permutation.

    Atom pairs match when their cosine dissimilarity 1 - |d_i . d_j| is
    below `eps`; the count is a maximum-cardinality one-to-one matching over
    all such pairs.
    """
    d_true = as_frame(d_true, "true dictionary")
    d_learned = as_frame(d_learned, "learned dictionary")
    for name, mat in (("true", d_true), ("learned", d_learned)):
        if not np.allclose(np.linalg.norm(mat, axis=0), 1.0, atol=1e-6):
            raise ValueError(f"{name} dictionary must have unit-norm atoms")
    dissimilarity = 1.0 - np.abs(d_true.T @ d_learned)
    return _max_bipartite_matching(dissimilarity < eps)
