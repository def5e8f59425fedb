"""Shared dense linear algebra, deterministic random streams, and matrix I/O.

All arithmetic is 64-bit float. Frames are plain 2-D numpy arrays whose
columns are the atoms; signals are 1-D arrays. Functions never mutate their
inputs, so values can be shared freely across concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SparseCode",
    "RecoveryResult",
    "RngStream",
    "as_frame",
    "as_signal",
    "has_unit_columns",
    "svd",
    "least_squares",
    "pseudoinverse",
    "gaussian_frame",
    "bernoulli_gaussian",
    "load_matrix",
    "save_matrix",
    "MatrixParseError",
]


def as_frame(a, name: str = "frame") -> np.ndarray:
    """Validate and return `a` as a finite float64 2-D array of column atoms."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_signal(b, name: str = "signal") -> np.ndarray:
    """Validate and return `b` as a finite float64 1-D array."""
    arr = np.asarray(b, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def has_unit_columns(a: np.ndarray, tol: float = 1e-8) -> bool:
    norms = np.linalg.norm(a, axis=0)
    return bool(np.all(np.abs(norms - 1.0) <= tol))


@dataclass(frozen=True)
class SparseCode:
    """A coefficient vector together with its exact non-zero support."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("sparse code contains non-finite entries")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def support(self) -> np.ndarray:
        """Sorted indices of the entries that are exactly non-zero."""
        return np.flatnonzero(self.values)

    @property
    def sparsity(self) -> int:
        """Number of non-zero entries (the l0 pseudo-norm)."""
        return int(np.count_nonzero(self.values))

    def __len__(self) -> int:
        return self.values.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "length": len(self),
            "support": [int(i) for i in self.support],
            "values": [float(v) for v in self.values],
        }


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of a sparse recovery solve.

    `residual_norm` is recomputed from the returned code, `objective_trace`
    holds the solver's natural per-iteration objective (documented by each
    solver), and `flags` carries solver-specific annotations such as
    ``rank_deficient_support`` or ``alternate_optima``.
    """

    code: SparseCode
    residual_norm: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...] = ()
    flags: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "code": self.code.to_json_dict(),
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "objective_trace": [float(v) for v in self.objective_trace],
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class RngStream:
    """Deterministic, forkable random stream.

    A stream is identified by a 64-bit master seed plus a path of integers;
    the same (seed, path) always yields the same sequence. Child streams are
    derived by extending the path, so independent tasks (grid cells, trials)
    can draw reproducibly without sharing a sequential generator. Streams are
    value-like: `generator()` returns a fresh generator each call.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def child(self, *indices: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin singular value decomposition A = U @ diag(s) @ V.T.

    Returns (U, s, V) with orthonormal columns in U and V and singular
    values in non-increasing order. Raises `numpy.linalg.LinAlgError` if the
    underlying LAPACK iteration fails to converge.
    """
    arr = as_frame(a, "matrix")
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    return u, s, vt.T


def least_squares(a, b) -> np.ndarray:
    """Minimum-l2-norm minimizer of ||A x - b||_2 (Moore-Penrose solution)."""
    arr = as_frame(a, "matrix")
    rhs = as_signal(b, "rhs")
    x, _, _, _ = np.linalg.lstsq(arr, rhs, rcond=None)
    return x


def pseudoinverse(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse."""
    return np.linalg.pinv(as_frame(a, "matrix"))


def gaussian_frame(n: int, m: int, rng: RngStream, unit_columns: bool = False) -> np.ndarray:
    """Draw an n x m matrix with i.i.d. standard normal entries.

    With `unit_columns` every column is scaled to unit l2 norm. A column that
    comes out exactly zero before normalization (probability ~0) is redrawn
    from the same stream.
    """
    if n < 1 or m < 1:
        raise ValueError("frame dimensions must be positive")
    g = rng.generator()
    a = g.standard_normal((n, m))
    if unit_columns:
        norms = np.linalg.norm(a, axis=0)
        while np.any(norms == 0.0):
            for j in np.flatnonzero(norms == 0.0):
                a[:, j] = g.standard_normal(n)
            norms = np.linalg.norm(a, axis=0)
        a /= norms
    return a


def bernoulli_gaussian(m: int, rho: float, rng: RngStream) -> SparseCode:
    """Bernoulli-Gaussian vector: entry_i = theta_i * omega_i.

    theta_i ~ Bernoulli(rho) and omega_i ~ N(0, 1), all independent.
    """
    if not 0.0 <= rho <= 0.5:
        raise ValueError("rho must lie in [0, 0.5]")
    g = rng.generator()
    theta = g.random(m) < rho
    omega = g.standard_normal(m)
    return SparseCode(np.where(theta, omega, 0.0))


class MatrixParseError(ValueError):
    """Raised when a CSV matrix file is malformed."""


def save_matrix(a, path) -> None:
    """Write a matrix as CSV, one row per line, 17 significant digits."""
    arr = as_frame(a, "matrix")
    lines = [",".join(f"{v:.17g}" for v in row) for row in arr]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> np.ndarray:
    """Read a CSV matrix written by `save_matrix` (round-trips exactly)."""
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            try:
                row = [float(tok) for tok in tokens]
            except ValueError:
                raise MatrixParseError(
                    f"{path}: non-numeric token on line {lineno}"
                ) from None
            if rows and len(row) != len(rows[0]):
                raise MatrixParseError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(rows[0])}"
                )
            rows.append(row)
    if not rows:
        raise MatrixParseError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)
