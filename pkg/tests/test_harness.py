import math
from datetime import date, timedelta

import pytest
from hypothesis import given, strategies as st

from econarrative.harness import (
    McNemarResult,
    TaskSpec,
    direction_of,
    evaluate,
    make_labels,
    mcnemar,
)
from econarrative.ingest import FinancialSeries


def _series(values, start=date(2020, 1, 1)):
    return FinancialSeries(
        "TEST", points=tuple((start + timedelta(days=i), float(v)) for i, v in enumerate(values))
    )


class TestMakeLabels:
    def test_pct_change_next_day(self):
        labels = make_labels(_series([100.0, 110.0]), "pct-change", 1)
        assert labels.values == (10.0,)

    def test_direction_next_day(self):
        labels = make_labels(_series([100.0, 110.0]), "direction-change", 1)
        assert labels.values == ("increase",)

    def test_tie_labels_decrease(self):
        labels = make_labels(_series([5.0, 5.0]), "direction-change", 1)
        assert labels.values == ("decrease",)

    def test_tie_convention_consistent_under_perturbation(self):
        # any upward nudge flips to increase, any downward stays decrease
        for eps in (1e-12, 1e-9, 1e-6, 1e-3):
            up = make_labels(_series([5.0, 5.0 + eps]), "direction-change", 1)
            down = make_labels(_series([5.0, 5.0 - eps]), "direction-change", 1)
            assert up.values == ("increase",)
            assert down.values == ("decrease",)

    def test_next_value(self):
        labels = make_labels(_series([1.0, 2.0, 3.0]), "next-value", 1)
        assert labels.values == (2.0, 3.0)

    def test_horizon_consumes_tail(self):
        labels = make_labels(_series(range(10)), "next-value", 7)
        assert len(labels.dates) == 3
        assert labels.values == (7.0, 8.0, 9.0)

    def test_horizon_longer_than_series(self):
        with pytest.raises(ValueError, match="horizon"):
            make_labels(_series([1.0, 2.0]), "next-value", 7)

    def test_label_uses_horizon_edge_pair(self):
        # h=7: label compares V(t+7) against V(t+6), not against V(t)
        values = [10.0] * 7 + [20.0, 5.0]
        labels = make_labels(_series(values), "direction-change", 7)
        assert labels.values == ("increase", "decrease")


class TestEvaluate:
    def test_perfect_predictions(self):
        report = evaluate([1.0, 2.0], [1.0, 2.0], "next-value")
        assert report.mse == 0.0
        report = evaluate(["increase"], ["increase"], "direction-change")
        assert report.accuracy == 1.0 and report.f1 == 1.0

    def test_up_predictor_identity(self):
        labels = ["increase"] * 576 + ["decrease"] * 424
        report = evaluate(["increase"] * 1000, labels, "direction-change")
        assert report.accuracy == pytest.approx(0.576)
        assert report.f1 == pytest.approx(2 * 0.576 / 1.576)
        assert report.f1 == pytest.approx(0.731, abs=5e-4)

    def test_down_predictor_zero_f1(self):
        labels = ["increase"] * 576 + ["decrease"] * 424
        report = evaluate(["decrease"] * 1000, labels, "direction-change")
        assert report.accuracy == pytest.approx(0.424)
        assert report.f1 == 0.0

    def test_mse(self):
        report = evaluate([1.0, 3.0], [2.0, 1.0], "pct-change")
        assert report.mse == pytest.approx((1.0 + 4.0) / 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="predictions"):
            evaluate([1.0], [1.0, 2.0], "next-value")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            evaluate([], [], "next-value")

    @given(st.lists(st.sampled_from(["increase", "decrease"]), min_size=1, max_size=200))
    def test_up_predictor_accuracy_equals_increase_fraction(self, labels):
        report = evaluate(["increase"] * len(labels), labels, "direction-change")
        fraction = labels.count("increase") / len(labels)
        assert report.accuracy == pytest.approx(fraction)
        if fraction > 0:
            assert report.f1 == pytest.approx(2 * fraction / (fraction + 1))


def exact_binomial_two_sided(b, c):
    """Independent oracle: direct two-sided binomial tail sum."""
    n = b + c
    if n == 0:
        return 1.0
    k = min(b, c)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2.0**n
    return min(1.0, 2.0 * tail)


class TestMcNemar:
    def test_identical_vectors(self):
        result = mcnemar([True, False, True], [True, False, True])
        assert (result.b, result.c) == (0, 0)
        assert result.p_value == 1.0

    def test_exact_case_matches_oracle(self):
        a = [True] * 5 + [False] * 15 + [True] * 30
        b = [False] * 5 + [True] * 15 + [True] * 30
        result = mcnemar(a, b)
        assert result.method == "exact"
        assert (result.b, result.c) == (5, 15)
        assert result.p_value == pytest.approx(exact_binomial_two_sided(5, 15), abs=1e-9)
        assert result.p_value == pytest.approx(0.0414, abs=5e-5)

    def test_balanced_large_disagreement_near_one(self):
        a = [True] * 50 + [False] * 50
        b = [False] * 50 + [True] * 50
        result = mcnemar(a, b)
        assert result.method == "chi-square-corrected"
        assert result.p_value > 0.9

    def test_switches_to_chi_square_at_25(self):
        a = [True] * 13 + [False] * 12
        b = [False] * 13 + [True] * 12
        assert mcnemar(a, b).method == "chi-square-corrected"
        assert mcnemar(a[:-1], b[:-1]).method == "exact"

    def test_chi_square_against_erfc_identity(self):
        a = [True] * 40 + [False] * 10 + [True] * 50
        b = [False] * 40 + [True] * 10 + [True] * 50
        result = mcnemar(a, b)
        statistic = (abs(40 - 10) - 1) ** 2 / 50
        assert result.p_value == pytest.approx(math.erfc(math.sqrt(statistic / 2)), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mcnemar([True], [True, False])

    @given(
        st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=120)
    )
    def test_symmetric_under_model_swap(self, pairs):
        a = [x for x, _ in pairs]
        b = [y for _, y in pairs]
        ab = mcnemar(a, b)
        ba = mcnemar(b, a)
        assert ab.p_value == pytest.approx(ba.p_value, abs=1e-12)
        assert (ab.b, ab.c) == (ba.c, ba.b)


class TestTaskSpec:
    def test_valid(self):
        spec = TaskSpec(target="VIX", task="direction-change", horizon=7, model_kind="TF")
        assert not spec.is_regression

    def test_invalid_horizon(self):
        with pytest.raises(ValueError):
            TaskSpec(target="VIX", task="next-value", horizon=3)

    def test_invalid_task(self):
        with pytest.raises(ValueError):
            TaskSpec(target="VIX", task="anomaly", horizon=1)


def test_direction_of():
    assert direction_of(1.0, 2.0) == "increase"
    assert direction_of(2.0, 1.0) == "decrease"
    assert direction_of(2.0, 2.0) == "decrease"
