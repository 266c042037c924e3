"""Spearman with average-rank ties against an explicit-rank oracle.

The oracle computes each value's rank by counting (smaller count plus half
the equal count) and forms Pearson from plain sums, sharing no code with the
implementation's sort-based ranking. Exhaustive coverage of series length 6
lives in the acceptance suite; this file exhausts lengths up to 5.
"""

import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from faitheval.correlation import (
    average_ranks,
    correlation_report,
    metric_correlations,
    spearman,
)
from faitheval.errors import DataError, DegenerateSeries, MissingScore


def oracle_rank(values, i):
    smaller = sum(1 for v in values if v < values[i])
    equal = sum(1 for v in values if v == values[i])
    return smaller + (equal + 1) / 2


def oracle_spearman(xs, ys):
    n = len(xs)
    rx = [oracle_rank(xs, i) for i in range(n)]
    ry = [oracle_rank(ys, i) for i in range(n)]
    sx, sy = sum(rx), sum(ry)
    sxy = sum(a * b for a, b in zip(rx, ry))
    sxx = sum(a * a for a in rx)
    syy = sum(b * b for b in ry)
    num = n * sxy - sx * sy
    den = math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))
    return num / den


# --- hand-checked values -------------------------------------------------------


def test_identical_order_is_one():
    assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)


def test_reversed_order_is_minus_one():
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_tied_ranks_hand_case():
    # x ranks (1, 2.5, 2.5, 4), y ranks (1, 3, 2, 4): rho = 4.5 / sqrt(22.5)
    assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(
        0.9486832980505138, abs=1e-9
    )


def test_average_ranks_examples():
    assert average_ranks([10, 20, 30]) == [1.0, 2.0, 3.0]
    assert average_ranks([1, 2, 2, 4]) == [1.0, 2.5, 2.5, 4.0]
    assert average_ranks([5, 5, 5, 1]) == [3.0, 3.0, 3.0, 1.0]


# --- error contract --------------------------------------------------------------


def test_constant_series_is_an_error_not_zero():
    with pytest.raises(DegenerateSeries):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateSeries):
        spearman([1, 2, 3], [7, 7, 7])


def test_length_mismatch_and_short_series():
    with pytest.raises(DataError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(DataError):
        spearman([1], [2])


# --- oracle comparison ------------------------------------------------------------


def test_exhaustive_series_up_to_length_five():
    for n in (2, 3, 4, 5):
        vectors = list(itertools.product((1, 2, 3), repeat=n))
        ranks = {v: [oracle_rank(v, i) for i in range(n)] for v in vectors}
        constant = {v for v in vectors if min(v) == max(v)}
        for xs in vectors:
            for ys in vectors:
                if xs in constant or ys in constant:
                    with pytest.raises(DegenerateSeries):
                        spearman(xs, ys)
                    continue
                got = spearman(xs, ys)
                want = oracle_spearman(xs, ys)
                assert got == pytest.approx(want, abs=1e-12), (xs, ys)
                assert average_ranks(xs) == ranks[xs]


def test_sampled_series_length_six():
    rng = random.Random(20240817)
    checked = 0
    while checked < 5000:
        xs = [rng.randint(1, 3) for _ in range(6)]
        ys = [rng.randint(1, 3) for _ in range(6)]
        if min(xs) == max(xs) or min(ys) == max(ys):
            continue
        assert spearman(xs, ys) == pytest.approx(oracle_spearman(xs, ys), abs=1e-12)
        checked += 1


# --- invariance properties ----------------------------------------------------------


@st.composite
def non_constant_series(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    xs = draw(
        st.lists(st.integers(min_value=-50, max_value=50), min_size=n, max_size=n)
    )
    ys = draw(
        st.lists(st.integers(min_value=-50, max_value=50), min_size=n, max_size=n)
    )
    if min(xs) == max(xs):
        xs[0] += 1
    if min(ys) == max(ys):
        ys[0] += 1
    return xs, ys


@given(non_constant_series())
def test_increasing_transform_invariance(pair):
    xs, ys = pair
    base = spearman(xs, ys)
    transformed = [math.exp(x / 10) for x in xs]
    assert spearman(transformed, ys) == pytest.approx(base, abs=1e-9)
    shifted = [3 * y + 7 for y in ys]
    assert spearman(xs, shifted) == pytest.approx(base, abs=1e-9)


@given(non_constant_series())
def test_self_and_negation(pair):
    xs, _ = pair
    assert spearman(xs, xs) == pytest.approx(1.0)
    assert spearman(xs, [-x for x in xs]) == pytest.approx(-1.0)


@given(non_constant_series())
def test_symmetry_and_bounds(pair):
    xs, ys = pair
    rho = spearman(xs, ys)
    assert -1.0 <= rho <= 1.0
    assert spearman(ys, xs) == pytest.approx(rho, abs=1e-12)


# --- pooled metric correlations --------------------------------------------------------


def test_metric_identical_to_label_is_one():
    labels = {("d1", "s"): 1, ("d2", "s"): 0, ("d3", "s"): 1, ("d4", "s"): 0}
    metric = {pair: float(v) for pair, v in labels.items()}
    assert metric_correlations(metric, labels) == pytest.approx(1.0)


def test_magnitude_is_reported():
    labels = {("d1", "s"): 1, ("d2", "s"): 0, ("d3", "s"): 1, ("d4", "s"): 0}
    anti = {pair: -float(v) for pair, v in labels.items()}
    assert metric_correlations(anti, labels) == pytest.approx(1.0)


def test_missing_score_for_labeled_pair():
    labels = {("d1", "s"): 1, ("d2", "s"): 0}
    with pytest.raises(MissingScore):
        metric_correlations({("d1", "s"): 0.5}, labels)


def test_unknown_label_kind_rejected():
    labels = {("d1", "s"): 1, ("d2", "s"): 0}
    metric = {("d1", "s"): 0.9, ("d2", "s"): 0.1}
    with pytest.raises(DataError):
        metric_correlations(metric, labels, label="sentiment")


def test_report_covers_both_label_kinds():
    faithful = {("d1", "s"): 1, ("d2", "s"): 0, ("d3", "s"): 0}
    factual = {("d2", "s"): 1, ("d3", "s"): 0}
    metrics = {
        "entail": {("d1", "s"): 0.9, ("d2", "s"): 0.6, ("d3", "s"): 0.2},
    }
    report = correlation_report(metrics, faithful, factual)
    assert set(report) == {("entail", "faithful"), ("entail", "factual")}
    assert report[("entail", "faithful")] == pytest.approx(
        abs(spearman([0.9, 0.6, 0.2], [1, 0, 0]))
    )
    assert report[("entail", "factual")] == pytest.approx(1.0)
