"""Spearman rank correlation between per-pair metric values and human labels.

Ties receive average ranks; the coefficient is the Pearson correlation of the
two rank vectors. A constant series has no rank order, so it is an error
rather than a silent zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import DataError, DegenerateSeries, MissingScore

Pair = tuple[str, str]

LABEL_FAITHFUL = "faithful"
LABEL_FACTUAL = "factual"


@dataclass(frozen=True)
class PairedSeries:
    """Aligned (metric value, 0/1 human label) rows keyed by unique pairs."""

    items: tuple[tuple[str, str, float, int], ...]

    @staticmethod
    def build(
        metric_scores: Mapping[Pair, float], human_labels: Mapping[Pair, int]
    ) -> "PairedSeries":
        if len(human_labels) < 2:
            raise DataError(f"need >= 2 labeled pairs, got {len(human_labels)}")
        items = []
        for pair in sorted(human_labels):
            if pair not in metric_scores:
                raise MissingScore(f"{pair[0]}/{pair[1]}")
            value = float(metric_scores[pair])
            if not math.isfinite(value):
                raise DataError(f"non-finite metric value for {pair}")
            items.append((pair[0], pair[1], value, int(human_labels[pair])))
        return PairedSeries(items=tuple(items))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise DataError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise DataError(f"need >= 2 observations, got {n}")
    if min(xs) == max(xs):
        raise DegenerateSeries("first series is constant")
    if min(ys) == max(ys):
        raise DegenerateSeries("second series is constant")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    rho = cov / math.sqrt(vx * vy)
    return max(-1.0, min(1.0, rho))


def metric_correlations(
    metric_scores: Mapping[Pair, float],
    human_labels: Mapping[Pair, int],
    label: str = LABEL_FAITHFUL,
) -> float:
    """|r_s| between a metric and 0/1 labels, pooled across systems."""
    if label not in (LABEL_FAITHFUL, LABEL_FACTUAL):
        raise DataError(f"unknown label kind {label!r}")
    series = PairedSeries.build(metric_scores, human_labels)
    xs = [row[2] for row in series.items]
    ys = [float(row[3]) for row in series.items]
    return abs(spearman(xs, ys))


def correlation_report(
    metrics: Mapping[str, Mapping[Pair, float]],
    faithful: Mapping[Pair, int],
    factual: Mapping[Pair, int],
) -> dict[tuple[str, str], float]:
    """{(metric_name, label): |r_s|} over both human label kinds."""
    out: dict[tuple[str, str], float] = {}
    for name in sorted(metrics):
        out[(name, LABEL_FAITHFUL)] = metric_correlations(
            metrics[name], faithful, LABEL_FAITHFUL
        )
        out[(name, LABEL_FACTUAL)] = metric_correlations(
            metrics[name], factual, LABEL_FACTUAL
        )
    return out
