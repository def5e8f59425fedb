"""sparsekit: sparse recovery, frame diagnostics, and dictionary learning.

Solver families: greedy (mp, omp, ls_omp), relaxation (sl0, limaps, focuss),
and convex (basis_pursuit, bpdn_lasso, elastic_net), plus the exhaustive
oracle. Frame analysis covers coherence, spark, RIC, and NSP constants;
experiments reproduce phase-transition surfaces and synthetic dictionary
recovery. The `sparsekit` command is the batch front end.
"""

__version__ = "0.1.0"

from .convex import (
    LassoConfig,
    StandardFormLp,
    basis_pursuit,
    bp_formulate,
    bpdn_lasso,
    elastic_net,
    lp_solve,
)
from .core import (
    RecoveryResult,
    RngStream,
    SparseCode,
    bernoulli_gaussian,
    gaussian_frame,
    least_squares,
    load_matrix,
    pseudoinverse,
    save_matrix,
    svd,
)
from .dictionary import (
    LearnConfig,
    atom_recovery_count,
    e_snr,
    ksvd_update,
    learn,
    mod_update,
    rsvd_update,
    sparse_coding_step,
)
from .experiments import (
    SOLVERS,
    PhaseConfig,
    SynthDictConfig,
    phase_grid,
    recovery_snr,
    synth_dict_experiment,
    volume_score,
)
from .frame_analysis import (
    analyze_frame,
    babel,
    best_k_term_error,
    exhaustive_p0,
    frame_bounds,
    gershgorin_spark_bound,
    krank,
    mutual_coherence,
    nsp_constant,
    ric,
    spark,
    welch_bound,
)
from .greedy import StopRule, ls_omp, mp, omp
from .relax import FocussConfig, LimapsConfig, Sl0Config, focuss, limaps, sl0, smoothed_l0

__all__ = [
    "__version__",
    "SparseCode",
    "RecoveryResult",
    "RngStream",
    "svd",
    "least_squares",
    "pseudoinverse",
    "gaussian_frame",
    "bernoulli_gaussian",
    "load_matrix",
    "save_matrix",
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
    "analyze_frame",
    "StopRule",
    "mp",
    "omp",
    "ls_omp",
    "Sl0Config",
    "LimapsConfig",
    "FocussConfig",
    "smoothed_l0",
    "sl0",
    "limaps",
    "focuss",
    "StandardFormLp",
    "LassoConfig",
    "lp_solve",
    "bp_formulate",
    "basis_pursuit",
    "bpdn_lasso",
    "elastic_net",
    "LearnConfig",
    "sparse_coding_step",
    "mod_update",
    "ksvd_update",
    "rsvd_update",
    "learn",
    "e_snr",
    "atom_recovery_count",
    "SOLVERS",
    "recovery_snr",
    "PhaseConfig",
    "phase_grid",
    "volume_score",
    "SynthDictConfig",
    "synth_dict_experiment",
]
