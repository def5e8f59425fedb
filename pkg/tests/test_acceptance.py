"""Acceptance suite: each test checks one release criterion at its stated
tolerance and prints a PASS/FAIL line (run with `pytest -s` to see them).

The two experiment criteria run at the documented desk scale and respect
their wall-clock budgets; everything is seeded, so reruns are identical.
"""

import math
import time

import numpy as np
import pytest

from sparsekit.convex import LassoConfig, basis_pursuit, bpdn_lasso, elastic_net
from sparsekit.core import RngStream, gaussian_frame, least_squares, pseudoinverse, svd
from sparsekit.experiments import (
    SOLVERS,
    PhaseConfig,
    SynthDictConfig,
    phase_grid,
    synth_dict_experiment,
    volume_score,
)
from sparsekit.frame_analysis import (
    exhaustive_p0,
    gershgorin_spark_bound,
    krank,
    mutual_coherence,
    nsp_constant,
    ric,
    spark,
)
from sparsekit.cli import main
from util_frames import low_coherence_frame, planted_instance, unit_frame

JOBS = 2


def _report(name, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_1_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(1001)
    solvers = ("omp", "bp", "sl0", "limaps", "focuss")
    hits = dict.fromkeys(solvers, 0)
    bp_nsp_hits = 0
    bp_nsp_total = 0
    n_instances = 200

    for i in range(n_instances):
        if i % 2 == 0:
            # plain Gaussian frame, k = 1 (coherence bound needs only mu < 1)
            n = int(rng.integers(6, 9))
            m = int(rng.integers(n + 2, 13))
            phi = unit_frame(n, m, rng)
            k = 1
        else:
            # low-coherence construction so k = 2 satisfies the bound
            phi = low_coherence_frame(8, 10, rng, iters=200)
            k = 2
        mu = mutual_coherence(phi)
        assert k < (1 + 1 / mu) / 2, "instance must satisfy the coherence bound"
        alpha, s = planted_instance(phi, k, rng)
        oracle_support = list(exhaustive_p0(phi, s, k).code.support)

        for name in solvers:
            result = SOLVERS[name](phi, s, k)
            if list(result.code.support) == oracle_support:
                hits[name] += 1
                matched = True
            else:
                matched = False
            if name == "bp" and nsp_constant(phi, k) < 1.0:
                bp_nsp_total += 1
                bp_nsp_hits += matched

    elapsed = time.monotonic() - t0
    rates = {name: hits[name] / n_instances for name in solvers}
    ok = all(rate >= 0.95 for rate in rates.values())
    ok = ok and bp_nsp_total > 50 and bp_nsp_hits == bp_nsp_total
    ok = ok and elapsed < 120
    _report(
        "criterion 1 (oracle equivalence)",
        ok,
        f"rates={ {k: round(v, 3) for k, v in rates.items()} }, "
        f"bp on nsp<1: {bp_nsp_hits}/{bp_nsp_total}, {elapsed:.0f}s (limit 120s)",
    )


def test_criterion_2_theorem_suite():
    t0 = time.monotonic()
    rng = np.random.default_rng(1002)

    spark_krank_ok = 0
    gershgorin_ok = 0
    ric_ok = 0
    for _ in range(100):
        n = int(rng.integers(4, 7))
        m = int(rng.integers(n + 1, 10))
        phi = unit_frame(n, m, rng)
        if spark(phi) == krank(phi) + 1:
            spark_krank_ok += 1
        if spark(phi) + 1e-9 >= gershgorin_spark_bound(phi):
            gershgorin_ok += 1
        if ric(phi, 1) <= 1e-10 and abs(ric(phi, 2) - mutual_coherence(phi)) <= 1e-10:
            ric_ok += 1

    # RIP-to-NSP: jittered orthonormal-plus-one frames trigger the premise
    nsp_checked = 0
    nsp_ok = 0
    threshold = math.sqrt(2.0) - 1.0
    for _ in range(60):
        n = int(rng.integers(5, 8))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        w = np.ones(n) + 0.35 * rng.standard_normal(n)
        w /= np.linalg.norm(w)
        phi = np.hstack([q, (q @ w)[:, None]])
        delta2 = ric(phi, 2)
        if delta2 >= threshold:
            continue
        nsp_checked += 1
        bound = math.sqrt(2.0) * delta2 / (1.0 - (1.0 + math.sqrt(2.0)) * delta2)
        if nsp_constant(phi, 2) <= bound + 1e-8:
            nsp_ok += 1

    elapsed = time.monotonic() - t0
    ok = (
        spark_krank_ok == 100
        and gershgorin_ok == 100
        and ric_ok == 100
        and nsp_checked >= 20
        and nsp_ok == nsp_checked
        and elapsed < 60
    )
    _report(
        "criterion 2 (theorem suite)",
        ok,
        f"spark=krank+1 {spark_krank_ok}/100, spark>=1+1/mu {gershgorin_ok}/100, "
        f"d1=0 & d2=mu {ric_ok}/100, RIP->NSP {nsp_ok}/{nsp_checked} triggered, "
        f"{elapsed:.0f}s (limit 60s)",
    )


def test_criterion_3_phase_transition():
    t0 = time.monotonic()
    cfg = PhaseConfig.desk(seed=0)
    cells = phase_grid(cfg, jobs=JOBS)
    elapsed = time.monotonic() - t0

    easy = [c for c in cells if c.delta >= 0.8 and c.rho <= 0.06]
    hard = [c for c in cells if c.delta <= 0.15 and c.rho >= 0.45]
    assert easy and hard
    corner_ok = all(
        min(c.mean_snr[name] for c in easy) > 60.0
        and max(c.mean_snr[name] for c in hard) < 10.0
        for name in cfg.solvers
    )
    scores = {name: volume_score(cells, name) for name in cfg.solvers}
    limaps_ok = scores["limaps"] >= 0.95
    ok = corner_ok and limaps_ok and elapsed < 600
    _report(
        "criterion 3 (phase transition)",
        ok,
        f"corners {'ok' if corner_ok else 'violated'}, "
        f"volumes={ {k: round(v, 3) for k, v in scores.items()} }, "
        f"V(limaps)>=0.95*max: {limaps_ok}, {elapsed:.0f}s (limit 600s). "
        f"Full-scale surfaces are not reproduced by default.",
    )


def test_criterion_4_dictionary_learning():
    t0 = time.monotonic()
    cfg = SynthDictConfig(
        sizes=((50, 100),),
        k_values=(5,),
        n_examples=2000,
        iterations=50,
        noise_snr_db=(None, 30.0),
        trials=10,
        algorithms=("ksvd", "rsvd"),
        seed=11,
    )
    settings = synth_dict_experiment(cfg, jobs=JOBS)
    elapsed = time.monotonic() - t0

    by_key = {(s.noise_snr_db, s.algorithm): s for s in settings}
    atoms_ksvd = by_key[(None, "ksvd")].atoms_recovered_mean
    atoms_rsvd = by_key[(None, "rsvd")].atoms_recovered_mean
    recovery_ok = atoms_ksvd >= 85.0 and atoms_rsvd >= 85.0

    esnr_ksvd = by_key[(30.0, "ksvd")].final_esnr_mean
    esnr_rsvd = by_key[(30.0, "rsvd")].final_esnr_mean
    gap_ok = esnr_rsvd >= esnr_ksvd - 0.2

    worst_increase = max(s.max_update_error_increase for s in settings)
    monotone_ok = worst_increase <= 1e-10

    ok = recovery_ok and gap_ok and monotone_ok and elapsed < 900
    _report(
        "criterion 4 (dictionary learning)",
        ok,
        f"no-noise atoms ksvd={atoms_ksvd:.1f} rsvd={atoms_rsvd:.1f} (need >= 85); "
        f"30 dB final E_SNR ksvd={esnr_ksvd:.2f} rsvd={esnr_rsvd:.2f} "
        f"(rsvd >= ksvd - 0.2: {gap_ok}); worst update increase {worst_increase:.2e}; "
        f"{elapsed:.0f}s (limit 900s). The full-scale 2 dB gap claim is not "
        f"desk-reproducible and is not asserted.",
    )


def test_criterion_5_convex_optimality():
    t0 = time.monotonic()
    rng = np.random.default_rng(1005)

    kkt_ok = 0
    for _ in range(100):
        n = int(rng.integers(5, 9))
        m = int(rng.integers(n + 1, 16))
        phi = unit_frame(n, m, rng)
        s = rng.standard_normal(n)
        lam = 0.05 * 2.0 * float(np.abs(phi.T @ s).max())
        result = bpdn_lasso(phi, s, LassoConfig(lam=lam, kkt_tol=1e-7, max_sweeps=20000))
        alpha = result.code.values
        grad = 2.0 * phi.T @ (phi @ alpha - s)
        on = alpha != 0.0
        viol = np.where(
            on, np.abs(grad + lam * np.sign(alpha)), np.maximum(np.abs(grad) - lam, 0.0)
        ).max()
        kkt_ok += viol <= 1e-6

    zero_ok = 0
    for _ in range(100):
        phi = unit_frame(5, 9, rng)
        s = rng.standard_normal(5)
        lam = 2.0 * float(np.abs(phi.T @ s).max())
        result = bpdn_lasso(phi, s, LassoConfig(lam=lam))
        zero_ok += result.code.sparsity == 0

    grouping_ok = 0
    for _ in range(20):
        phi = unit_frame(6, 8, rng)
        phi[:, 5] = phi[:, 2]
        beta_true = np.zeros(8)
        beta_true[[2, 5]] = 1.0
        s = phi @ beta_true + 0.01 * rng.standard_normal(6)
        result = elastic_net(
            phi, s, LassoConfig(lam=0.1, mix=0.5, kkt_tol=1e-12, max_sweeps=50000)
        )
        beta = result.code.values
        grouping_ok += abs(beta[2] - beta[5]) <= 1e-6

    elapsed = time.monotonic() - t0
    ok = kkt_ok == 100 and zero_ok == 100 and grouping_ok == 20 and elapsed < 60
    _report(
        "criterion 5 (convex optimality)",
        ok,
        f"KKT<=1e-6 {kkt_ok}/100, zero-solution {zero_ok}/100, "
        f"grouping {grouping_ok}/20, {elapsed:.0f}s (limit 60s)",
    )


def test_criterion_6_numerical_kernels():
    t0 = time.monotonic()
    rng = np.random.default_rng(1006)

    svd_ok = True
    for _ in range(50):
        a = rng.standard_normal((int(rng.integers(3, 30)), int(rng.integers(3, 40))))
        u, s, v = svd(a)
        err = np.linalg.norm(a - u @ np.diag(s) @ v.T)
        svd_ok &= err <= 1e-10 * max(1.0, np.linalg.norm(a))

    mp_ok = True
    for _ in range(50):
        a = rng.standard_normal((int(rng.integers(2, 12)), int(rng.integers(2, 12))))
        p = pseudoinverse(a)
        scale = max(1.0, np.linalg.norm(a))
        mp_ok &= np.linalg.norm(a @ p @ a - a) <= 1e-9 * scale
        mp_ok &= np.linalg.norm(p @ a @ p - p) <= 1e-9 * scale
        mp_ok &= np.linalg.norm((a @ p).T - a @ p) <= 1e-9 * scale
        mp_ok &= np.linalg.norm((p @ a).T - p @ a) <= 1e-9 * scale

    a = rng.standard_normal((6, 14))
    b = rng.standard_normal(6)
    x0 = least_squares(a, b)
    _, _, vt = np.linalg.svd(a)
    kernel = vt[6:].T
    least_norm_ok = all(
        np.linalg.norm(x0 + kernel @ rng.standard_normal(8)) >= np.linalg.norm(x0) - 1e-9
        for _ in range(1000)
    )

    elapsed = time.monotonic() - t0
    ok = svd_ok and mp_ok and least_norm_ok and elapsed < 60
    _report(
        "criterion 6 (numerical kernels)",
        ok,
        f"svd {svd_ok}, pseudoinverse {mp_ok}, least-norm {least_norm_ok}, "
        f"{elapsed:.0f}s (limit 60s)",
    )


def test_criterion_7_cli_determinism(tmp_path):
    import json

    phase_cfg = tmp_path / "phase.json"
    phase_cfg.write_text(
        json.dumps({"n": 16, "grid_size": 2, "trials": 3, "solvers": ["omp", "sl0"], "seed": 7})
    )
    dict_cfg = tmp_path / "dict.json"
    dict_cfg.write_text(
        json.dumps(
            {
                "sizes": [[12, 24]],
                "k": [2],
                "examples": 120,
                "iterations": 3,
                "noise_snr_db": [None],
                "trials": 2,
                "seed": 3,
            }
        )
    )

    runs = {
        "phase": (phase_cfg, ("cells.csv", "volumes.json", "heatmap_omp.svg", "heatmap_sl0.svg")),
        "dictlearn": (dict_cfg, ("learn_curves.csv", "atoms_table.csv", "summary.json")),
    }
    identical = True
    for command, (cfg_path, artifacts) in runs.items():
        first = tmp_path / f"{command}-1"
        second = tmp_path / f"{command}-2"
        assert main([command, "--config", str(cfg_path), "--output-dir", str(first)]) == 0
        manifest = first / "manifest.json"
        assert main([command, "--config", str(manifest), "--output-dir", str(second), "--jobs", "2"]) == 0
        for name in artifacts:
            identical &= (first / name).read_bytes() == (second / name).read_bytes()

    _report(
        "criterion 7 (CLI determinism)",
        identical,
        "manifest reruns byte-identical across phase and dictlearn (jobs 1 vs 2)",
    )
