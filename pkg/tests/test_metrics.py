"""Metric correctness: hand-derived values, brute-force oracle, properties."""

from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from escirank.errors import DataError
from escirank.metrics import (
    EvalSummary,
    GainScheme,
    Ranking,
    aggregate_runs,
    dcg,
    idcg,
    ndcg,
    ndcg_from_gains,
    ndcg_many,
    run_score,
)
from escirank.models import EsciLabel, Judgment

GAIN_POOL = (1.0, 0.1, 0.01, 0.0)


def oracle_max_dcg(gains: list[float], k: int | None = None) -> float:
    """Independent ideal-DCG oracle: exhaustive maximum over permutations."""
    best = -math.inf
    for perm in set(itertools.permutations(gains)):
        limit = len(perm) if k is None else min(k, len(perm))
        value = sum(perm[i] / math.log2(i + 2) for i in range(limit))
        best = max(best, value)
    return best


def oracle_ndcg(gains: list[float], k: int | None = None) -> float | None:
    ideal = oracle_max_dcg(gains, k)
    if ideal == 0.0:
        return None
    limit = len(gains) if k is None else min(k, len(gains))
    actual = sum(gains[i] / math.log2(i + 2) for i in range(limit))
    return actual / ideal


class TestDcg:
    def test_single_gain(self):
        assert dcg([1.0], 1) == pytest.approx(1.0, abs=1e-12)

    def test_hand_derived_three_items(self):
        # 0/1 + 1.0/log2(3) + 0.1/2
        assert dcg([0.0, 1.0, 0.1], 3) == pytest.approx(0.680930, abs=1e-6)

    def test_all_zero(self):
        assert dcg([0.0, 0.0, 0.0], 3) == 0.0

    def test_truncation(self):
        assert dcg([1.0, 1.0, 1.0], 1) == pytest.approx(1.0, abs=1e-12)

    def test_empty_list_rejected(self):
        with pytest.raises(DataError):
            dcg([], 1)

    def test_k_zero_rejected(self):
        with pytest.raises(DataError):
            dcg([1.0], 0)


class TestIdcg:
    def test_hand_derived(self):
        # 1.0/1 + 0.1/log2(3) + 0/2
        assert idcg([0.0, 1.0, 0.1], 3) == pytest.approx(1.063093, abs=1e-6)

    def test_sorted_input_is_fixed_point(self):
        gains = [0.9, 0.5, 0.1, 0.0]
        assert idcg(gains) == pytest.approx(dcg(gains), abs=1e-12)

    def test_single_element(self):
        assert idcg([0.5], 1) == pytest.approx(0.5, abs=1e-12)


class TestNdcg:
    def default_judgments(self):
        return [
            Judgment("q", "a", EsciLabel.IRRELEVANT, split="test"),
            Judgment("q", "b", EsciLabel.EXACT, split="test"),
            Judgment("q", "c", EsciLabel.SUBSTITUTE, split="test"),
        ]

    def test_hand_derived_quotient(self):
        ranking = Ranking("q", (("a", 3.0), ("b", 2.0), ("c", 1.0)))  # I, E, S
        score = ndcg(ranking, self.default_judgments(), GainScheme.default())
        assert score == pytest.approx(0.640518, abs=1e-6)

    def test_ideal_ordering_scores_one(self):
        ranking = Ranking("q", (("b", 3.0), ("c", 2.0), ("a", 1.0)))  # E, S, I
        score = ndcg(ranking, self.default_judgments(), GainScheme.default())
        assert score == pytest.approx(1.0, abs=1e-12)

    def test_all_irrelevant_query_skipped(self):
        judgments = [Judgment("q", pid, EsciLabel.IRRELEVANT, split="test") for pid in "ab"]
        ranking = Ranking("q", (("a", 1.0), ("b", 0.0)))
        assert ndcg(ranking, judgments, GainScheme.default()) is None

    def test_missing_judgment_is_error(self):
        ranking = Ranking("q", (("a", 1.0), ("zzz", 0.0)))
        with pytest.raises(DataError, match="zzz"):
            ndcg(ranking, self.default_judgments(), GainScheme.default())

    def test_oracle_equivalence_small_instances(self):
        rng = random.Random(1234)
        for _ in range(300):
            n = rng.randint(1, 8)
            gains = [rng.choice(GAIN_POOL) for _ in range(n)]
            expected = oracle_ndcg(gains)
            actual = ndcg_from_gains(gains)
            if expected is None:
                assert actual is None
            else:
                assert actual == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(GAIN_POOL), min_size=1, max_size=30))
    def test_bounded_between_zero_and_one(self, gains):
        score = ndcg_from_gains(gains)
        if score is not None:
            assert 0.0 <= score <= 1.0 + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(GAIN_POOL), min_size=1, max_size=12))
    def test_one_iff_descending(self, gains):
        score = ndcg_from_gains(gains)
        if score is None:
            return
        if gains == sorted(gains, reverse=True):
            assert score == pytest.approx(1.0, abs=1e-12)
        elif score == pytest.approx(1.0, abs=1e-12):
            assert gains == sorted(gains, reverse=True)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(GAIN_POOL), min_size=2, max_size=12), st.data())
    def test_adjacent_swap_improves(self, gains, data):
        positions = [i for i in range(len(gains) - 1) if gains[i] < gains[i + 1]]
        if not positions or all(g == 0 for g in gains):
            return
        i = data.draw(st.sampled_from(positions))
        swapped = gains[:]
        swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
        assert ndcg_from_gains(swapped) > ndcg_from_gains(gains)

    def test_argsort_invariance_under_affine_rescaling(self):
        judgments = self.default_judgments()
        scores = {"a": 0.2, "b": 0.9, "c": 0.5}
        rescaled = {pid: 7.0 * s + 3.0 for pid, s in scores.items()}
        r1 = Ranking.from_scores("q", scores)
        r2 = Ranking.from_scores("q", rescaled)
        assert r1.product_ids == r2.product_ids
        assert ndcg(r1, judgments) == ndcg(r2, judgments)

    def test_k_defaults_to_full_length(self):
        gains = [0.0, 1.0, 0.1, 0.01]
        assert ndcg_from_gains(gains) == pytest.approx(
            dcg(gains, 4) / idcg(gains, 4), abs=1e-12
        )


class TestNdcgMany:
    def test_matches_scalar_and_marks_skips(self):
        lists = [[0.0, 1.0, 0.1], [1.0], [0.0, 0.0]]
        out = ndcg_many(lists)
        assert out[0] == pytest.approx(0.640518, abs=1e-6)
        assert out[1] == pytest.approx(1.0, abs=1e-12)
        assert out[2] is None

    def test_k_truncation_matches_scalar(self):
        lists = [[0.1, 1.0, 0.0, 0.01], [0.01, 0.1, 1.0]]
        out = ndcg_many(lists, k=2)
        for gains, got in zip(lists, out):
            assert got == pytest.approx(dcg(gains, 2) / idcg(gains, 2), abs=1e-12)

    def test_empty_batch(self):
        assert ndcg_many([]) == []

    def test_empty_segment_rejected(self):
        with pytest.raises(DataError):
            ndcg_many([[1.0], []])


class TestGainScheme:
    def test_default_values(self):
        assert GainScheme.default().as_values() == (1.0, 0.1, 0.01, 0.0)

    def test_non_monotone_rejected(self):
        with pytest.raises(DataError):
            GainScheme.from_values((0.1, 1.0, 0.0, 0.0))

    def test_negative_rejected(self):
        with pytest.raises(DataError):
            GainScheme.from_values((1.0, 0.5, 0.0, -0.1))

    def test_all_zero_rejected(self):
        with pytest.raises(DataError):
            GainScheme.from_values((0.0, 0.0, 0.0, 0.0))

    def test_wrong_arity_rejected(self):
        with pytest.raises(DataError):
            GainScheme.from_values((1.0, 0.1))


class TestRanking:
    def test_from_scores_sorts_and_breaks_ties_by_id(self):
        ranking = Ranking.from_scores("q", {"b": 1.0, "c": 2.0, "a": 1.0})
        assert ranking.product_ids == ("c", "a", "b")

    def test_duplicate_products_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            Ranking("q", (("a", 1.0), ("a", 0.5)))

    def test_unsorted_rejected(self):
        with pytest.raises(DataError, match="sorted"):
            Ranking("q", (("a", 0.5), ("b", 1.0)))

    def test_tie_break_violation_rejected(self):
        with pytest.raises(DataError, match="sorted"):
            Ranking("q", (("b", 1.0), ("a", 1.0)))

    def test_nan_rejected(self):
        with pytest.raises(DataError, match="NaN"):
            Ranking.from_scores("q", {"a": float("nan")})

    def test_to_bytes_deterministic(self):
        a = Ranking.from_scores("q", {"a": 0.25, "b": 0.75})
        b = Ranking.from_scores("q", {"b": 0.75, "a": 0.25})
        assert a.to_bytes() == b.to_bytes()


class TestAggregateRuns:
    def _runs(self, scores: list[float]) -> list[dict[str, float | None]]:
        # single-query runs so the run score equals the given value
        return [{"q1": s} for s in scores]

    def test_mean_min_max(self):
        summary = aggregate_runs(self._runs([0.7, 0.8, 0.9, 0.6]))
        assert summary.mean == pytest.approx(0.75)
        assert summary.min == pytest.approx(0.6)
        assert summary.max == pytest.approx(0.9)
        assert summary.runs == 4

    def test_median_mode_for_five_orderings(self):
        summary = aggregate_runs(self._runs([0.3, 0.5, 0.4, 0.6, 0.2]), central="median")
        assert summary.mean == pytest.approx(0.4)
        assert summary.central == "median"

    def test_single_run_collapses(self):
        summary = aggregate_runs(self._runs([0.42]))
        assert summary.mean == summary.min == summary.max == pytest.approx(0.42)

    def test_mismatched_query_sets_rejected(self):
        with pytest.raises(DataError, match="different query sets"):
            aggregate_runs([{"q1": 0.5}, {"q2": 0.5}])

    def test_skipped_queries_excluded_from_mean(self):
        runs = [{"q1": 0.5, "q2": None, "q3": 1.0}]
        summary = aggregate_runs(runs)
        assert summary.mean == pytest.approx(0.75)
        assert summary.skipped == 1

    def test_run_score_all_skipped_rejected(self):
        with pytest.raises(DataError):
            run_score({"q1": None})

    def test_invariant_min_le_mean_le_max(self):
        with pytest.raises(DataError):
            EvalSummary(mean=0.9, min=0.1, max=0.5, runs=2, skipped=0)

    def test_unknown_central_rejected(self):
        with pytest.raises(DataError):
            aggregate_runs(self._runs([0.5]), central="mode")

    def test_weighted_mean_by_example_count(self):
        runs = [{"big": 0.4, "small": 1.0}]
        weights = {"big": 9.0, "small": 1.0}
        summary = aggregate_runs(runs, weights=weights)
        assert summary.mean == pytest.approx((0.4 * 9 + 1.0 * 1) / 10)
        unweighted = aggregate_runs(runs)
        assert unweighted.mean == pytest.approx(0.7)

    def test_weighted_mean_ignores_skipped(self):
        score, skipped = run_score({"a": 0.5, "b": None}, weights={"a": 2.0, "b": 100.0})
        assert score == pytest.approx(0.5)
        assert skipped == 1


class TestKernelParity:
    def test_backends_bit_identical(self):
        from escirank import _kernels
        from escirank._kernels import fallback

        if _kernels.BACKEND != "compiled":
            pytest.skip("compiled kernel unavailable")
        rng = np.random.default_rng(0)
        sizes = rng.integers(1, 40, size=500)
        offsets = np.zeros(len(sizes) + 1, dtype=np.intp)
        np.cumsum(sizes, out=offsets[1:])
        gains = rng.choice(np.array(GAIN_POOL), size=int(offsets[-1]))
        compiled_out, compiled_skipped = _kernels.ndcg_segments(gains, offsets)
        python_out, python_skipped = fallback.ndcg_segments(gains, offsets)
        assert compiled_skipped == python_skipped
        assert np.array_equal(compiled_out, python_out)  # exact, not approx

    def test_backends_bit_identical_with_k(self):
        from escirank import _kernels
        from escirank._kernels import fallback

        if _kernels.BACKEND != "compiled":
            pytest.skip("compiled kernel unavailable")
        rng = np.random.default_rng(1)
        sizes = rng.integers(1, 25, size=200)
        offsets = np.zeros(len(sizes) + 1, dtype=np.intp)
        np.cumsum(sizes, out=offsets[1:])
        gains = rng.random(int(offsets[-1]))
        for k in (1, 3, 10):
            a, _ = _kernels.ndcg_segments(gains, offsets, k)
            b, _ = fallback.ndcg_segments(gains, offsets, k)
            assert np.array_equal(a, b)

    def test_fallback_validates_offsets(self):
        from escirank._kernels import fallback

        with pytest.raises(ValueError):
            fallback.ndcg_segments(np.array([1.0]), np.array([0, 2]))
        with pytest.raises(ValueError):
            fallback.ndcg_segments(np.array([1.0, 1.0]), np.array([0, 0, 2]))

    def test_compiled_validates_offsets(self):
        from escirank import _kernels

        if _kernels.BACKEND != "compiled":
            pytest.skip("compiled kernel unavailable")
        with pytest.raises(ValueError):
            _kernels.ndcg_segments(np.array([1.0]), np.array([0, 2]))
        with pytest.raises(ValueError):
            _kernels.ndcg_segments(np.array([1.0, 1.0]), np.array([0, 0, 2]))
