"""Reproduction protocols: delta-rho phase-transition surfaces with volume
scoring, and the synthetic dictionary-learning study.

Every cell and trial derives its own random stream from (cell index, trial
index), and results are reduced in fixed trial order, so grids are
bit-reproducible for a given master seed regardless of the worker count.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .convex import LassoConfig, basis_pursuit, bpdn_lasso, elastic_net
from .core import RngStream, gaussian_frame
from .dictionary import LearnConfig, atom_recovery_count, e_snr, learn
from .frame_analysis import exhaustive_p0
from .greedy import StopRule, ls_omp, mp, omp
from .relax import focuss, limaps, sl0

__all__ = [
    "SOLVERS",
    "recovery_snr",
    "PhaseConfig",
    "PhaseCell",
    "phase_grid",
    "volume_score",
    "write_cells_csv",
    "write_volumes_json",
    "write_heatmap_svg",
    "SynthDictConfig",
    "SynthSetting",
    "synth_dict_experiment",
    "write_learn_curves_csv",
    "write_atoms_table_csv",
]

log = logging.getLogger(__name__)

SNR_SENTINEL = 300.0


def recovery_snr(alpha_star, alpha_hat) -> float:
    """Recovery quality 20 log10(||a_hat|| / ||a_hat - a_star||) in dB.

    Exact recovery maps to the +300 sentinel, an all-zero estimate of a
    non-zero target to -300, and everything else is clipped to [-300, 300]
    so surface aggregates stay finite.
    """
    a_star = np.asarray(getattr(alpha_star, "values", alpha_star), dtype=float)
    a_hat = np.asarray(getattr(alpha_hat, "values", alpha_hat), dtype=float)
    if a_star.shape != a_hat.shape:
        raise ValueError("codes must have equal length")
    diff = float(np.linalg.norm(a_hat - a_star))
    if diff == 0.0:
        return SNR_SENTINEL
    hat_norm = float(np.linalg.norm(a_hat))
    if hat_norm == 0.0:
        return -SNR_SENTINEL
    return float(np.clip(20.0 * math.log10(hat_norm / diff), -SNR_SENTINEL, SNR_SENTINEL))


def _greedy_stop(phi, k):
    return StopRule.default(phi.shape[0]) if k is None else StopRule(max_sparsity=k, residual_tol=1e-10)


def _solve_mp(phi, s, k=None):
    return mp(phi, s, _greedy_stop(phi, k))


def _solve_omp(phi, s, k=None):
    return omp(phi, s, _greedy_stop(phi, k))


def _solve_ls_omp(phi, s, k=None):
    return ls_omp(phi, s, _greedy_stop(phi, k))


def _solve_sl0(phi, s, k=None):
    return sl0(phi, s)


def _solve_limaps(phi, s, k=None):
    return limaps(phi, s)


def _solve_focuss(phi, s, k=None):
    return focuss(phi, s)


def _solve_bp(phi, s, k=None):
    return basis_pursuit(phi, s)


def _solve_lasso(phi, s, k=None):
    """Pathwise coordinate descent: warm-started lam ladder down to the
    noiseless-recovery weight 1e-4 * lam_max."""
    lam_max = 2.0 * float(np.abs(phi.T @ s).max())
    if lam_max == 0.0:
        return bpdn_lasso(phi, s, LassoConfig(lam=0.0, max_sweeps=1))
    warm = None
    result = None
    for scale in (1e-1, 1e-2, 1e-3, 1e-4):
        lam = lam_max * scale
        sweeps = 20 if scale > 1e-4 else 60
        cfg = LassoConfig(lam=lam, max_sweeps=sweeps, kkt_tol=max(1e-3 * lam, 1e-12))
        result = bpdn_lasso(phi, s, cfg, warm_start=warm)
        warm = result.code.values
    return result


def _solve_elastic_net(phi, s, k=None):
    lam_max = 2.0 * float(np.abs(phi.T @ s).max())
    lam = max(1e-3 * lam_max, 1e-300)
    cfg = LassoConfig(lam=lam, mix=0.5, max_sweeps=500, kkt_tol=max(1e-3 * lam, 1e-12))
    return elastic_net(phi, s, cfg)


def _solve_oracle(phi, s, k=None):
    if k is None:
        raise ValueError("the exhaustive oracle needs a target sparsity")
    return exhaustive_p0(phi, s, k)


# Solver registry: name -> callable(phi, s, k) -> RecoveryResult. Greedy
# solvers and the oracle use k when it is known (the planted sparsity of a
# trial, or --k on the command line); the others run on their defaults.
SOLVERS = {
    "mp": _solve_mp,
    "omp": _solve_omp,
    "ls_omp": _solve_ls_omp,
    "sl0": _solve_sl0,
    "limaps": _solve_limaps,
    "focuss": _solve_focuss,
    "bp": _solve_bp,
    "lasso": _solve_lasso,
    "elastic_net": _solve_elastic_net,
    "oracle": _solve_oracle,
}


@dataclass(frozen=True)
class PhaseConfig:
    """Grid layout for the phase-transition experiment.

    Cells are the cartesian product of `m_values` (indeterminacy delta = n/m)
    and `k_values` (sparsity rho = k/n), each averaged over `trials`
    instances.
    """

    n: int = 50
    m_values: tuple[int, ...] = ()
    k_values: tuple[int, ...] = ()
    trials: int = 20
    solvers: tuple[str, ...] = ("omp", "sl0", "limaps", "bp", "lasso")
    seed: int = 0

    def __post_init__(self):
        if not self.m_values or not self.k_values:
            raise ValueError("m_values and k_values must be non-empty")
        if any(m <= self.n for m in self.m_values):
            raise ValueError("every m must exceed n (delta < 1)")
        if any(not 1 <= k <= self.n / 2 for k in self.k_values):
            raise ValueError("every k must lie in [1, n/2] (rho <= 0.5)")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        unknown = [name for name in self.solvers if name not in SOLVERS]
        if unknown:
            raise ValueError(f"unknown solvers {unknown}; valid: {sorted(SOLVERS)}")

    @classmethod
    def grid(cls, n: int, grid_size: int, trials: int, solvers=None, seed: int = 0,
             delta_range=(0.1, 0.99), rho_max: float = 0.5) -> "PhaseConfig":
        deltas = np.linspace(delta_range[0], delta_range[1], grid_size)
        m_values = tuple(dict.fromkeys(int(round(n / d)) for d in deltas))
        ks = np.linspace(1, max(int(round(rho_max * n)), 1), grid_size)
        k_values = tuple(dict.fromkeys(int(round(k)) for k in ks))
        kwargs = {"n": n, "m_values": m_values, "k_values": k_values, "trials": trials, "seed": seed}
        if solvers is not None:
            kwargs["solvers"] = tuple(solvers)
        return cls(**kwargs)

    @classmethod
    def desk(cls, solvers=None, seed: int = 0) -> "PhaseConfig":
        """Minutes-scale default: n = 50, 10 x 10 cells, 20 trials."""
        return cls.grid(n=50, grid_size=10, trials=20, solvers=solvers, seed=seed)

    @classmethod
    def full(cls, solvers=None, seed: int = 0) -> "PhaseConfig":
        """Full-scale surface: n = 100, 100 trials per cell (hours)."""
        return cls.grid(n=100, grid_size=10, trials=100, solvers=solvers, seed=seed)

    @property
    def cells(self) -> list[tuple[int, int, int]]:
        return [
            (index, m, k)
            for index, (m, k) in enumerate(itertools.product(self.m_values, self.k_values))
        ]


@dataclass(frozen=True)
class PhaseCell:
    delta: float
    rho: float
    mean_snr: dict
    trials: int


def _planted_instance(cfg: PhaseConfig, m: int, k: int, stream: RngStream):
    """Unit-norm Gaussian frame and a code with exactly k non-zeros
    (Bernoulli-Gaussian support conditioned on size k)."""
    phi = gaussian_frame(cfg.n, m, stream.child(0), unit_columns=True)
    support = stream.child(1).generator().choice(m, size=k, replace=False)
    values = stream.child(2).generator().standard_normal(k)
    alpha = np.zeros(m)
    alpha[support] = values
    return phi, alpha


def _run_cell(args) -> PhaseCell:
    cfg, index, m, k = args
    sums = dict.fromkeys(cfg.solvers, 0.0)
    master = RngStream(cfg.seed)
    for trial in range(cfg.trials):
        stream = master.child(index, trial)
        phi, alpha_star = _planted_instance(cfg, m, k, stream)
        s = phi @ alpha_star
        for name in cfg.solvers:
            try:
                result = SOLVERS[name](phi, s, k)
                snr = recovery_snr(alpha_star, result.code)
            except Exception as exc:  # noqa: BLE001 - a failed trial scores the floor
                log.warning("solver %s failed on cell %d trial %d: %s", name, index, trial, exc)
                snr = -SNR_SENTINEL
            sums[name] += snr
    means = {name: sums[name] / cfg.trials for name in cfg.solvers}
    return PhaseCell(delta=cfg.n / m, rho=k / cfg.n, mean_snr=means, trials=cfg.trials)


def phase_grid(cfg: PhaseConfig, jobs: int = 1) -> list[PhaseCell]:
    """Run every cell of the grid; `jobs` > 1 fans cells out to processes.

    Output is identical for any worker count: each trial draws from its own
    (seed, cell, trial) stream and cells are collected in grid order.
    """
    tasks = [(cfg, index, m, k) for index, m, k in cfg.cells]
    if jobs <= 1:
        return [_run_cell(task) for task in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, tasks))


def volume_score(cells, solver: str) -> float:
    """Volume under a solver's surface, normalized by the best solver's.

    The volume is the plain sum of per-cell mean SNRs (sentinels included);
    the best-scoring solver gets exactly 1.
    """
    if not cells:
        raise ValueError("empty grid")
    names = list(cells[0].mean_snr)
    for cell in cells:
        if solver not in cell.mean_snr:
            raise ValueError(f"grid is missing cells for solver {solver!r}")
    volumes = {name: sum(cell.mean_snr[name] for cell in cells) for name in names}
    best = max(volumes.values())
    if best == 0.0:
        return 1.0 if volumes[solver] == 0.0 else float("-inf")
    return volumes[solver] / best


def write_cells_csv(cells, cfg: PhaseConfig, path) -> None:
    lines = ["delta,rho,solver,mean_snr,trials"]
    for cell in cells:
        for name in cfg.solvers:
            lines.append(
                f"{cell.delta:.17g},{cell.rho:.17g},{name},{cell.mean_snr[name]:.17g},{cell.trials}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_volumes_json(cells, cfg: PhaseConfig, path) -> None:
    import json

    scores = {name: volume_score(cells, name) for name in cfg.solvers}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"volumes": scores}, fh, indent=2)
        fh.write("\n")


def _snr_color(snr: float) -> str:
    """Linear color map anchored at -300 dB (dark blue) and +300 dB (yellow)."""
    t = (min(max(snr, -SNR_SENTINEL), SNR_SENTINEL) + SNR_SENTINEL) / (2 * SNR_SENTINEL)
    r = int(round(255 * t))
    g = int(round(255 * t))
    b = int(round(96 + (64 - 96) * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def write_heatmap_svg(cells, solver: str, path) -> None:
    """Self-contained SVG heatmap of one solver's mean-SNR surface."""
    deltas = sorted({cell.delta for cell in cells})
    rhos = sorted({cell.rho for cell in cells})
    size = 40
    margin = 60
    width = margin + size * len(deltas) + 20
    height = margin + size * len(rhos) + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{margin}" y="20" font-family="monospace" font-size="14">{solver} mean SNR (dB), '
        f"anchors -300/+300</text>",
    ]
    lookup = {(cell.delta, cell.rho): cell.mean_snr[solver] for cell in cells}
    for col, delta in enumerate(deltas):
        for row, rho in enumerate(rhos):
            snr = lookup[(delta, rho)]
            x = margin + col * size
            # rho grows upward from the bottom row
            y = margin + (len(rhos) - 1 - row) * size - 20
            parts.append(
                f'<rect x="{x}" y="{y}" width="{size}" height="{size}" fill="{_snr_color(snr)}">'
                f"<title>delta={delta:.6g} rho={rho:.6g} snr={snr:.6g}</title></rect>"
            )
    for col, delta in enumerate(deltas):
        x = margin + col * size
        parts.append(
            f'<text x="{x}" y="{height - 4}" font-family="monospace" font-size="9">{delta:.2f}</text>'
        )
    for row, rho in enumerate(rhos):
        y = margin + (len(rhos) - 1 - row) * size
        parts.append(
            f'<text x="4" y="{y}" font-family="monospace" font-size="9">{rho:.2f}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


@dataclass(frozen=True)
class SynthDictConfig:
    """Synthetic dictionary-recovery study configuration.

    `noise_snr_db` entries scale an i.i.d. Gaussian noise matrix so that
    ||D X||_F / ||N||_F equals the stated dB value; None means no noise.
    """

    sizes: tuple[tuple[int, int], ...] = ((50, 100),)
    k_values: tuple[int, ...] = (5,)
    n_examples: int = 2000
    iterations: int = 50
    noise_snr_db: tuple[float | None, ...] = (None,)
    trials: int = 10
    algorithms: tuple[str, ...] = ("ksvd", "rsvd")
    group_size: int = 5
    seed: int = 0

    def __post_init__(self):
        for n, m in self.sizes:
            if not n < m:
                raise ValueError("each size must satisfy n < m")
        for k in self.k_values:
            if any(k >= n for n, _ in self.sizes):
                raise ValueError("sparsity must satisfy k < n")
        if self.n_examples < max(m for _, m in self.sizes):
            raise ValueError("need at least m training examples")
        if self.trials < 1 or self.iterations < 0:
            raise ValueError("trials must be positive and iterations non-negative")


@dataclass(frozen=True)
class SynthSetting:
    """Aggregated results for one (size, sparsity, noise, algorithm) cell."""

    n: int
    m: int
    k: int
    noise_snr_db: float | None
    algorithm: str
    mean_esnr_curve: tuple[float, ...]
    final_esnr_mean: float
    atoms_recovered_mean: float
    trials: int
    max_update_error_increase: float


def _synth_instance(n, m, k, n_examples, noise_snr_db, stream: RngStream):
    d_true = gaussian_frame(n, m, stream.child(0), unit_columns=True)
    g_support = stream.child(1).generator()
    g_values = stream.child(2).generator()
    x_true = np.zeros((m, n_examples))
    for col in range(n_examples):
        support = g_support.choice(m, size=k, replace=False)
        x_true[support, col] = g_values.standard_normal(k)
    y = d_true @ x_true
    if noise_snr_db is not None:
        raw = stream.child(3).generator().standard_normal((n, n_examples))
        scale = float(np.linalg.norm(y)) / (float(np.linalg.norm(raw)) * 10.0 ** (noise_snr_db / 20.0))
        y = y + scale * raw
    return d_true, y


def _synth_trial(args):
    """One (setting, trial) unit: every algorithm learns from the same data
    and the same initial dictionary."""
    cfg, coder, combo_index, (n, m), k, noise, trial = args
    stream = RngStream(cfg.seed).child(combo_index, trial)
    d_true, y = _synth_instance(n, m, k, cfg.n_examples, noise, stream)
    out = {}
    for alg in cfg.algorithms:
        learn_cfg = LearnConfig(
            m=m,
            k=k,
            iterations=cfg.iterations,
            algorithm=alg,
            group_size=cfg.group_size,
            coder=coder,
            rng=stream.child(4),
        )
        trace = learn(y, learn_cfg)
        increase = float("-inf")
        if trace.pre_update_error:
            increase = max(
                post - pre
                for pre, post in zip(trace.pre_update_error, trace.post_update_error)
            )
        out[alg] = (
            np.asarray(trace.esnr),
            trace.esnr[-1],
            atom_recovery_count(d_true, trace.dictionary),
            increase,
        )
    return out


def synth_dict_experiment(cfg: SynthDictConfig, coder=None, jobs: int = 1) -> list[SynthSetting]:
    """Run the dictionary-recovery study over every configured setting.

    For each trial a random unit-norm dictionary generates k-sparse data
    (plus optional noise); results are averaged in trial order, so the
    output does not depend on the worker count.
    """
    combos = list(itertools.product(cfg.sizes, cfg.k_values, cfg.noise_snr_db))
    tasks = [
        (cfg, coder, combo_index, size, k, noise, trial)
        for combo_index, (size, k, noise) in enumerate(combos)
        for trial in range(cfg.trials)
    ]
    if jobs <= 1:
        results = [_synth_trial(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_synth_trial, tasks))

    settings: list[SynthSetting] = []
    for combo_index, ((n, m), k, noise) in enumerate(combos):
        trial_results = results[combo_index * cfg.trials:(combo_index + 1) * cfg.trials]
        for alg in cfg.algorithms:
            curve = np.zeros(max(cfg.iterations, 1))
            final = 0.0
            atoms = 0.0
            worst_increase = float("-inf")
            for res in trial_results:
                esnr, last, recovered, increase = res[alg]
                curve += esnr
                final += last
                atoms += recovered
                worst_increase = max(worst_increase, increase)
            settings.append(
                SynthSetting(
                    n=n,
                    m=m,
                    k=k,
                    noise_snr_db=noise,
                    algorithm=alg,
                    mean_esnr_curve=tuple(float(v) / cfg.trials for v in curve),
                    final_esnr_mean=final / cfg.trials,
                    atoms_recovered_mean=atoms / cfg.trials,
                    trials=cfg.trials,
                    max_update_error_increase=worst_increase,
                )
            )
    return settings


def _noise_label(noise) -> str:
    return "none" if noise is None else f"{noise:.17g}"


def write_learn_curves_csv(settings, path) -> None:
    lines = ["n,m,k,noise_snr_db,algorithm,iteration,mean_esnr"]
    for s in settings:
        for it, value in enumerate(s.mean_esnr_curve, start=1):
            lines.append(
                f"{s.n},{s.m},{s.k},{_noise_label(s.noise_snr_db)},{s.algorithm},{it},{value:.17g}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_atoms_table_csv(settings, path) -> None:
    lines = ["n,m,k,noise_snr_db,algorithm,mean_recovered_atoms,final_esnr_mean,trials"]
    for s in settings:
        lines.append(
            f"{s.n},{s.m},{s.k},{_noise_label(s.noise_snr_db)},{s.algorithm},"
            f"{s.atoms_recovered_mean:.17g},{s.final_esnr_mean:.17g},{s.trials}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
