import itertools
import math

import numpy as np
import pytest

from sparsekit.frame_analysis import (
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
from util_frames import low_coherence_frame, planted_instance, simplex_etf, unit_frame


class TestMutualCoherence:
    def test_orthogonal(self):
        assert mutual_coherence(np.eye(3)) == 0.0

    def test_three_atoms(self):
        phi = np.array([[1.0, 0.0, 1 / np.sqrt(2)], [0.0, 1.0, 1 / np.sqrt(2)]])
        assert abs(mutual_coherence(phi) - 1 / np.sqrt(2)) < 1e-12

    def test_matches_pairwise_oracle(self):
        phi = unit_frame(4, 8, np.random.default_rng(0))
        oracle = max(
            abs(phi[:, i] @ phi[:, j]) for i, j in itertools.combinations(range(8), 2)
        )
        assert abs(mutual_coherence(phi) - oracle) < 1e-14

    def test_zero_column_rejected(self):
        bad = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            mutual_coherence(bad)


class TestWelchBound:
    def test_square(self):
        assert welch_bound(3, 3) == 0.0

    def test_small(self):
        assert abs(welch_bound(2, 3) - 0.5) < 1e-15

    def test_large(self):
        value = welch_bound(500, 2000)
        assert abs(value - math.sqrt(1500 / (500 * 1999))) < 1e-15
        assert abs(value - 0.03874) < 1e-4

    def test_rejects_wide(self):
        with pytest.raises(ValueError):
            welch_bound(5, 4)


class TestBabel:
    def test_identity(self):
        for p in (1, 2, 3):
            assert babel(np.eye(4), p) == 0.0

    def test_matches_coherence_at_one(self):
        phi = unit_frame(4, 8, np.random.default_rng(1))
        assert abs(babel(phi, 1) - mutual_coherence(phi)) < 1e-12

    def test_duplicated_atom(self):
        phi = unit_frame(4, 6, np.random.default_rng(2))
        phi[:, 3] = phi[:, 0]
        assert abs(babel(phi, 1) - 1.0) < 1e-12

    def test_exhaustive_oracle(self):
        phi = unit_frame(3, 6, np.random.default_rng(3))
        for p in (1, 2, 3):
            oracle = 0.0
            for j in range(6):
                rest = [i for i in range(6) if i != j]
                for group in itertools.combinations(rest, p):
                    oracle = max(oracle, sum(abs(phi[:, j] @ phi[:, i]) for i in group))
            assert abs(babel(phi, p) - oracle) < 1e-12


class TestSparkKrank:
    def test_duplicate_columns(self):
        phi = unit_frame(4, 6, np.random.default_rng(4))
        phi[:, 5] = phi[:, 1]
        assert spark(phi) == 2

    def test_three_vectors_in_plane(self):
        phi = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        assert spark(phi) == 3
        assert krank(phi) == 2

    def test_identity_sentinel(self):
        assert spark(np.eye(4)) == 5
        assert krank(np.eye(4)) == 4

    def test_zero_column(self):
        phi = np.eye(3).copy()
        phi[:, 1] = 0.0
        assert krank(phi) == 0
        assert spark(phi) == 1

    def test_budget_refusal(self):
        phi = unit_frame(10, 20, np.random.default_rng(5))
        with pytest.raises(ValueError, match="budget"):
            spark(phi, subset_budget=100)

    @pytest.mark.parametrize("seed", range(5))
    def test_spark_krank_identity_random(self, seed):
        rng = np.random.default_rng(seed)
        phi = unit_frame(4, rng.integers(5, 9), rng)
        assert spark(phi) == krank(phi) + 1


class TestGershgorin:
    def test_orthogonal_sentinel(self):
        assert gershgorin_spark_bound(np.eye(3)) == math.inf

    def test_formula(self):
        phi = np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])
        assert abs(gershgorin_spark_bound(phi) - 3.0) < 1e-12

    @pytest.mark.parametrize("seed", range(50))
    def test_lower_bounds_spark(self, seed):
        phi = unit_frame(5, 8, np.random.default_rng(100 + seed))
        assert spark(phi) + 1e-9 >= gershgorin_spark_bound(phi)


class TestRic:
    def test_orthonormal(self):
        for k in (1, 2, 3):
            assert ric(np.eye(5), k) <= 1e-14

    def test_order_one_and_two(self):
        phi = unit_frame(4, 8, np.random.default_rng(6))
        assert ric(phi, 1) <= 1e-10
        assert abs(ric(phi, 2) - mutual_coherence(phi)) <= 1e-10

    def test_monotone(self):
        phi = unit_frame(4, 6, np.random.default_rng(7))
        d1, d2, d3 = ric(phi, 1), ric(phi, 2), ric(phi, 3)
        assert d1 <= d2 <= d3


class TestNspConstant:
    def test_trivial_kernel(self):
        rng = np.random.default_rng(8)
        square = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        assert nsp_constant(square, 2) == 0.0

    def test_two_atom_line(self):
        # kernel of [1 1] is spanned by (1, -1): gamma = 1 at order 1
        assert abs(nsp_constant(np.array([[1.0, 1.0]]), 1) - 1.0) < 1e-9

    def test_dominates_sampled_ratios(self):
        rng = np.random.default_rng(9)
        phi = rng.standard_normal((3, 5))
        gamma = nsp_constant(phi, 1)
        _, _, vt = np.linalg.svd(phi)
        kernel = vt[3:].T
        z = kernel @ rng.standard_normal((2, 100_000))
        num = np.abs(z)
        denom = np.abs(z).sum(axis=0) - num
        sampled = (num / denom).max()
        assert sampled <= gamma + 1e-6
        assert gamma <= sampled + 0.05  # the sampled sup gets close from below

    def test_sparse_kernel_vector_gives_infinity(self):
        phi = unit_frame(3, 5, np.random.default_rng(10))
        phi[:, 4] = phi[:, 0]  # (1, 0, 0, 0, -1) is a 2-sparse kernel vector
        assert nsp_constant(phi, 2) == math.inf


class TestBestKTerm:
    def test_sparse_vector(self):
        assert best_k_term_error([0.0, 3.0, 0.0, -1.0], 2, 2) == 0.0

    def test_three_two_one(self):
        assert abs(best_k_term_error([3.0, 2.0, 1.0], 1, 2) - math.sqrt(5)) < 1e-12

    def test_full_support(self):
        assert best_k_term_error([3.0, 2.0, 1.0], 3, 1) == 0.0

    def test_tie_keeps_lowest_index(self):
        # entries 1 and -1 tie; index 0 must be kept
        assert abs(best_k_term_error([1.0, -1.0, 0.5], 1, 1) - 1.5) < 1e-12

    def test_quasi_norm(self):
        err = best_k_term_error([2.0, 1.0, 1.0], 1, 0.5)
        assert abs(err - (1.0 + 1.0) ** 2) < 1e-12


class TestExhaustiveP0:
    def test_single_atom(self):
        phi = unit_frame(5, 8, np.random.default_rng(11))
        result = exhaustive_p0(phi, 3.0 * phi[:, 2], 1)
        assert "exact" in result.flags
        assert list(result.code.support) == [2]
        assert abs(result.code.values[2] - 3.0) < 1e-10

    def test_planted_unique_recovery(self):
        rng = np.random.default_rng(12)
        phi = unit_frame(6, 10, rng)
        assert spark(phi) > 4  # planted k=2 satisfies the spark condition
        alpha, s = planted_instance(phi, 2, rng)
        result = exhaustive_p0(phi, s, 2)
        assert np.allclose(result.code.values, alpha, atol=1e-9)

    def test_out_of_span(self):
        phi = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        result = exhaustive_p0(phi, np.array([0.0, 0.0, 1.0]), 2)
        assert "exact" not in result.flags
        assert result.residual_norm > 0.9

    def test_budget_refusal(self):
        phi = unit_frame(10, 40, np.random.default_rng(13))
        with pytest.raises(ValueError, match="budget"):
            exhaustive_p0(phi, phi[:, 0], 5, support_budget=1000)


class TestFrameBounds:
    def test_orthonormal(self):
        fb = frame_bounds(np.eye(3))
        assert fb.a == fb.b == 1.0 and fb.tight and fb.parseval

    def test_scaled_identity(self):
        fb = frame_bounds(2.0 * np.eye(3))
        assert abs(fb.a - 4.0) < 1e-12 and abs(fb.b - 4.0) < 1e-12
        assert fb.tight and not fb.parseval

    def test_mercedes_benz_is_etf(self):
        angles = [np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3]
        phi = np.array([[np.cos(t) for t in angles], [np.sin(t) for t in angles]])
        fb = frame_bounds(phi)
        assert fb.etf and fb.tight
        g = np.abs(phi.T @ phi)
        for i, j in itertools.combinations(range(3), 2):
            assert abs(g[i, j] - welch_bound(2, 3)) < 1e-12

    def test_rank_deficient_warns(self):
        phi = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.warns(UserWarning):
            fb = frame_bounds(phi)
        assert fb.a == 0.0


class TestTheorems:
    @pytest.mark.parametrize("seed", range(10))
    def test_spark_equals_krank_plus_one(self, seed):
        rng = np.random.default_rng(200 + seed)
        phi = unit_frame(5, int(rng.integers(6, 10)), rng)
        assert spark(phi) == krank(phi) + 1

    def test_coherence_uniqueness(self):
        # a zero-residual solution below (1 + 1/mu)/2 is the unique sparsest one
        rng = np.random.default_rng(14)
        phi = low_coherence_frame(8, 10, rng)
        mu = mutual_coherence(phi)
        assert (1 + 1 / mu) / 2 > 2
        alpha, s = planted_instance(phi, 2, rng)
        result = exhaustive_p0(phi, s, 2)
        assert "exact" in result.flags
        assert np.allclose(result.code.values, alpha, atol=1e-9)
        # enumeration: no other support of size <= 2 reaches zero residual
        zero_supports = []
        for size in (1, 2):
            for subset in itertools.combinations(range(10), size):
                sub = phi[:, subset]
                coef, *_ = np.linalg.lstsq(sub, s, rcond=None)
                if np.linalg.norm(s - sub @ coef) <= 1e-10:
                    zero_supports.append(set(subset))
        assert zero_supports == [set(result.code.support)]

    def test_spark_uniqueness(self):
        rng = np.random.default_rng(15)
        phi = unit_frame(6, 9, rng)
        assert spark(phi) > 4
        alpha, s = planted_instance(phi, 2, rng)
        result = exhaustive_p0(phi, s, 2)
        assert list(result.code.support) == list(np.flatnonzero(alpha))

    def test_rip_nsp_true_order_on_simplex(self):
        # order-k form of the RIP-to-NSP bound, checked on the simplex frame
        for n in (6, 9):
            phi = simplex_etf(n)
            delta2 = ric(phi, 2)
            assert delta2 < math.sqrt(2) - 1
            bound = math.sqrt(2) * delta2 / (1 - (1 + math.sqrt(2)) * delta2)
            assert nsp_constant(phi, 1) <= bound + 1e-8

    def test_welch_bound_below_coherence(self):
        for seed in range(10):
            rng = np.random.default_rng(300 + seed)
            phi = unit_frame(4, 7, rng)
            assert welch_bound(4, 7) <= mutual_coherence(phi) + 1e-12


def test_frame_report_keys():
    phi = unit_frame(4, 6, np.random.default_rng(16))
    report = analyze_frame(phi, ric_orders=(1, 2), nsp_orders=(1,))
    payload = report.to_json_dict()
    for key in ("coherence", "welch_bound", "spark", "krank", "ric", "nsp", "frame_bounds", "flags"):
        assert key in payload
    assert payload["spark"] == payload["krank"] + 1
    assert set(payload["ric"]) == {"1", "2"}
    assert set(payload["nsp"]) == {"1"}
