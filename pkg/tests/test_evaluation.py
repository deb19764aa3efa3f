"""Retrieval-style scoring of boundary sets against pooled judgements."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from segtool import (
    AnnotationMatrix,
    BoundarySet,
    ConfusionCounts,
    ValidationError,
    aggregate_metric,
    confusion,
    cue_segment,
    evaluate_algorithm,
    evaluate_humans,
    metrics,
    pause_segment,
    percent_agreement,
    target_boundaries,
)

F = Fraction


def make_matrix(rows, narrative_id="n"):
    ids = [f"s{k + 1}" for k in range(len(rows))]
    return AnnotationMatrix(narrative_id, ids, np.array(rows, dtype=np.int64))


class TestConfusion:
    def test_worked_example(self):
        counts = confusion({1, 10}, {0, 10}, sites=11)
        assert counts == ConfusionCounts(a=1, b=1, c=1, d=8)
        scores = metrics(counts)
        assert scores.recall == F(1, 2)
        assert scores.precision == F(1, 2)
        assert scores.fallout == F(1, 9)
        assert scores.error == F(2, 11)

    def test_accepts_boundary_sets(self, pear9):
        narrative, matrix = pear9
        counts = confusion(
            cue_segment(narrative), target_boundaries(matrix), matrix.sites
        )
        assert (counts.a, counts.b, counts.c, counts.d) == (1, 1, 1, 8)

    def test_narrative_mismatch_rejected(self):
        left = BoundarySet("a", frozenset({0}))
        right = BoundarySet("b", frozenset({0}))
        with pytest.raises(ValidationError):
            confusion(left, right, sites=3)

    def test_out_of_range_site_rejected(self):
        with pytest.raises(ValidationError):
            confusion({5}, set(), sites=5)
        with pytest.raises(ValidationError):
            confusion(set(), {-1}, sites=5)

    def test_empty_universe_rejected(self):
        with pytest.raises(ValidationError):
            confusion(set(), set(), sites=0)

    def test_undefined_ratios_are_none(self):
        scores = metrics(confusion(set(), set(), sites=4))
        assert scores.recall is None
        assert scores.precision is None
        assert scores.fallout == F(0)
        assert scores.error == F(0)

        scores = metrics(confusion({0, 1, 2, 3}, {0, 1, 2, 3}, sites=4))
        assert scores.fallout is None
        assert scores.recall == F(1)

    @settings(max_examples=200, deadline=None)
    @given(
        hst.integers(min_value=1, max_value=30).flatmap(
            lambda n: hst.tuples(
                hst.just(n),
                hst.sets(hst.integers(0, n - 1)),
                hst.sets(hst.integers(0, n - 1)),
            )
        )
    )
    def test_cell_identities(self, case):
        sites, predicted, target = case
        counts = confusion(predicted, target, sites)
        assert counts.a + counts.b == len(predicted)
        assert counts.a + counts.c == len(target)
        assert counts.total == sites
        scores = metrics(counts)
        if scores.error is not None:
            assert scores.error == F(counts.b + counts.c, sites)

        # Swapping roles swaps recall with precision and leaves error fixed.
        swapped = metrics(confusion(target, predicted, sites))
        assert swapped.recall == scores.precision
        assert swapped.precision == scores.recall
        assert swapped.error == scores.error


class TestAlgorithmScores:
    def test_cue_against_majority(self, pear9):
        narrative, matrix = pear9
        scores = evaluate_algorithm(cue_segment(narrative), matrix)
        assert scores.as_dict() == {
            "recall": F(1, 2),
            "precision": F(1, 2),
            "fallout": F(1, 9),
            "error": F(2, 11),
        }

    def test_pause_against_majority(self, pear9):
        narrative, matrix = pear9
        scores = evaluate_algorithm(pause_segment(narrative), matrix)
        assert scores.as_dict() == {
            "recall": F(1),
            "precision": F(2, 7),
            "fallout": F(5, 9),
            "error": F(5, 11),
        }

    def test_exact_strength_target(self, pear9):
        narrative, matrix = pear9
        # Exactly-one-subject sites are {3, 4, 8}; the pause set hits 3.
        scores = evaluate_algorithm(pause_segment(narrative), matrix, exact=1)
        assert scores.recall == F(1, 3)

    def test_threshold_and_exact_conflict(self, pear9):
        narrative, matrix = pear9
        with pytest.raises(ValidationError):
            evaluate_algorithm(cue_segment(narrative), matrix, threshold=4, exact=2)
        with pytest.raises(ValidationError):
            target_boundaries(matrix, threshold=4, exact=2)

    def test_wrong_narrative_rejected(self, pear9):
        _, matrix = pear9
        with pytest.raises(ValidationError):
            evaluate_algorithm(BoundarySet("other", frozenset({0})), matrix)


class TestAggregate:
    def test_exact_mean_and_variance(self):
        agg = aggregate_metric([F(1, 2), F(1), None, F(3, 4)])
        assert agg.count == 3
        assert agg.skipped == 1
        assert agg.mean == F(3, 4)
        assert agg.variance == F(1, 24)

    def test_all_none(self):
        agg = aggregate_metric([None, None])
        assert agg.mean is None
        assert agg.variance is None
        assert agg.count == 0
        assert agg.skipped == 2


class TestHumanScores:
    def test_fixture_per_subject(self, pear9):
        _, matrix = pear9
        result = evaluate_humans(matrix)
        assert result.target.sites == frozenset({0, 10})
        assert result.mode == "threshold=4"
        by_id = {s.subject_id: s for s in result.per_subject}
        assert by_id["s1"].scores.recall == F(1)
        assert by_id["s1"].scores.error == F(0)
        assert by_id["s4"].scores.precision == F(2, 3)
        assert by_id["s7"].counts == ConfusionCounts(a=1, b=2, c=1, d=7)
        assert result.summary["recall"].mean == F(13, 14)
        assert result.summary["recall"].count == 7

    def test_mean_recall_matches_boundary_agreement(self, pear9):
        _, matrix = pear9
        report = percent_agreement(matrix)
        result = evaluate_humans(matrix)
        assert result.summary["recall"].mean == report.percent_boundary

    @settings(max_examples=120, deadline=None)
    @given(
        hst.integers(min_value=2, max_value=6).flatmap(
            lambda j: hst.tuples(
                hst.just(j),
                hst.lists(
                    hst.lists(hst.integers(0, 1), min_size=5, max_size=5),
                    min_size=j,
                    max_size=j,
                ),
                hst.integers(min_value=1, max_value=j),
            )
        )
    )
    def test_identity_holds_at_every_threshold(self, case):
        _j, rows, threshold = case
        matrix = make_matrix(rows)
        result = evaluate_humans(matrix, threshold=threshold)
        report = percent_agreement(matrix, threshold=threshold)
        assert result.summary["recall"].mean == report.percent_boundary

    def test_leave_one_out_smoke(self, pear9):
        _, matrix = pear9
        result = evaluate_humans(matrix, leave_one_out=True)
        assert result.mode.endswith("leave-one-out")
        # With s1 removed the remaining 6 subjects still put 5 marks on
        # site 0 and 6 on site 10, majority of 6 is 4, so the target for
        # s1 stays {0, 10} and the score is unchanged.
        assert result.per_subject[0].scores.recall == F(1)
        # s7 is scored against the other six, whose extra marks all fall
        # below the reduced threshold.
        assert result.per_subject[6].scores.recall == F(1, 2)

    def test_leave_one_out_needs_panel(self):
        matrix = make_matrix([[1, 0, 1]])
        with pytest.raises(ValidationError):
            evaluate_humans(matrix, leave_one_out=True)
