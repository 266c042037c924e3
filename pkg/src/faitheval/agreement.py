"""Chance-corrected inter-annotator agreement (Fleiss' kappa).

Hallucination and linguistic agreement is computed at the word level, pooling
every word of a system's summaries into one item set; factuality agreement is
computed per summary because that task elicits one true/false verdict per
summary, not spans.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .corpus import (
    AnnotationSet,
    SpanAnnotation,
    SummaryRecord,
    TASK_FACTUALITY,
    TASK_HALLUCINATION,
    TASK_LINGUISTIC,
    span_to_words,
    summary_index,
    tokenize,
)
from .errors import IncompleteAnnotation, InsufficientRaters, RaggedCounts

HALLUCINATION_CATEGORIES = ("faithful", "intrinsic", "extrinsic")
LINGUISTIC_CATEGORIES = ("clean", "repetition", "incoherence")
FACTUALITY_CATEGORIES = ("factual", "non-factual")

KAPPA_TASKS = ("hallucination", "factuality", "repetition", "incoherence")


def word_labels(
    summary_text: str,
    spans_by_annotator: Mapping[str, Sequence[SpanAnnotation]],
    task: str,
) -> dict[str, list[str]]:
    """Per-annotator word label vector; uncovered words get the default
    category (faithful / clean)."""
    default = "faithful" if task == TASK_HALLUCINATION else "clean"
    tokens = tokenize(summary_text)
    out: dict[str, list[str]] = {}
    for annotator_id, spans in spans_by_annotator.items():
        labels = [default] * len(tokens)
        for span in spans:
            for w in span_to_words(span, tokens):
                labels[w] = span.label
        out[annotator_id] = labels
    return out


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> float:
    """Fleiss' kappa over an items x categories count matrix.

    Every row must sum to the same rater count N >= 2.  The degenerate case
    where all ratings fall in a single category is perfect agreement (1.0).
    """
    if not counts:
        raise RaggedCounts("no items")
    k = len(counts[0])
    raters = sum(counts[0])
    if raters < 2:
        raise InsufficientRaters(f"need >= 2 raters, got {raters}")
    for row in counts:
        if len(row) != k:
            raise RaggedCounts(f"row with {len(row)} categories, expected {k}")
        if sum(row) != raters:
            raise RaggedCounts(f"row sums to {sum(row)}, expected {raters}")

    n = len(counts)
    p_bar = sum(
        (sum(c * c for c in row) - raters) / (raters * (raters - 1)) for row in counts
    ) / n
    totals = [sum(row[j] for row in counts) for j in range(k)]
    grand = n * raters
    p_e = sum((t / grand) ** 2 for t in totals)
    if p_e >= 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)


def category_counts(
    label_vectors: Iterable[Sequence[str]], categories: Sequence[str]
) -> list[list[int]]:
    """Transpose per-annotator label vectors into per-item category counts."""
    vectors = list(label_vectors)
    if not vectors:
        return []
    length = len(vectors[0])
    for v in vectors:
        if len(v) != length:
            raise RaggedCounts("annotator label vectors differ in length")
    index = {c: i for i, c in enumerate(categories)}
    rows = []
    for item in range(length):
        row = [0] * len(categories)
        for v in vectors:
            row[index[v[item]]] += 1
        rows.append(row)
    return rows


def kappa_report(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
) -> dict[tuple[str, str], float]:
    """{(system_id, task): kappa} for hallucination, factuality, repetition
    and incoherence; tasks without complete triple annotation are omitted."""
    index = summary_index(summaries)
    n_raters = annotations.annotators_per_item
    out: dict[tuple[str, str], float] = {}

    for task, categories in (
        (TASK_HALLUCINATION, HALLUCINATION_CATEGORIES),
        (TASK_LINGUISTIC, LINGUISTIC_CATEGORIES),
    ):
        by_pair = annotations.spans_by_pair(task)
        per_system: dict[str, list[list[int]]] = {}
        binary: dict[tuple[str, str], list[list[int]]] = {}
        for (doc_id, system_id), by_annotator in sorted(by_pair.items()):
            if len(by_annotator) != n_raters:
                raise IncompleteAnnotation(
                    doc_id, system_id,
                    f"{len(by_annotator)} annotators, expected {n_raters}",
                )
            labels = word_labels(index[(doc_id, system_id)].text, by_annotator, task)
            vectors = [labels[a] for a in sorted(labels)]
            per_system.setdefault(system_id, []).extend(
                category_counts(vectors, categories)
            )
            if task == TASK_LINGUISTIC:
                # the report splits linguistic agreement per irregularity type,
                # each as a binary marked/unmarked judgment
                for marked in ("repetition", "incoherence"):
                    flat = [
                        [el == marked for el in v] for v in vectors
                    ]
                    rows = [
                        [sum(v[i] for v in flat), sum(not v[i] for v in flat)]
                        for i in range(len(vectors[0]))
                    ]
                    binary.setdefault((system_id, marked), []).extend(rows)
        if task == TASK_HALLUCINATION:
            for system_id, rows in per_system.items():
                if rows:
                    out[(system_id, "hallucination")] = fleiss_kappa(rows)
        else:
            for (system_id, marked), rows in binary.items():
                if rows:
                    out[(system_id, marked)] = fleiss_kappa(rows)

    verdicts = annotations.verdicts_by_pair()
    per_system_rows: dict[str, list[list[int]]] = {}
    for (doc_id, system_id), by_annotator in sorted(verdicts.items()):
        if len(by_annotator) != n_raters:
            raise IncompleteAnnotation(
                doc_id, system_id,
                f"{len(by_annotator)} verdicts, expected {n_raters}",
            )
        n_true = sum(1 for j in by_annotator.values() if j.verdict)
        per_system_rows.setdefault(system_id, []).append(
            [n_true, n_raters - n_true]
        )
    for system_id, rows in per_system_rows.items():
        out[(system_id, "factuality")] = fleiss_kappa(rows)

    return out
