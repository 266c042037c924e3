"""Aggregate span annotations and factuality verdicts into per-system tables.

A word counts as hallucinated of a given type only when all three annotators
covered it with a span of that type; a summary is hallucinated when it has at
least one such word, faithful otherwise; and "+factual" adds the hallucinated
summaries whose three factuality verdicts are all true.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import (
    AnnotationSet,
    JudgmentRecord,
    SpanAnnotation,
    SummaryRecord,
    TASK_HALLUCINATION,
    TASK_LINGUISTIC,
    TokenSequence,
    span_to_words,
    summary_index,
    tokenize,
)
from .errors import IncompleteAnnotation


@dataclass(frozen=True)
class DocFlags:
    intrinsic: bool
    extrinsic: bool
    factual: bool | None  # None when faithful or when verdicts are absent

    @property
    def hallucinated(self) -> bool:
        return self.intrinsic or self.extrinsic

    @property
    def faithful(self) -> bool:
        return not self.hallucinated


@dataclass(frozen=True)
class SystemHalluRow:
    system_id: str
    pct_intrinsic: float
    pct_extrinsic: float
    pct_union: float
    pct_faithful: float
    pct_faithful_or_factual: float | None  # None when no verdicts exist
    pairs: int


@dataclass(frozen=True)
class FactualBreakdownRow:
    system_id: str
    pct_faithful: float
    pct_intrinsic: float
    pct_intrinsic_factual: float
    pct_extrinsic: float
    pct_extrinsic_factual: float
    pct_union: float
    pct_union_factual: float
    pct_factual_total: float


@dataclass(frozen=True)
class SpanStatsRow:
    system_id: str
    total_intrinsic: int
    avg_intrinsic: float
    total_extrinsic: int
    avg_extrinsic: float
    avg_span_length: float


@dataclass(frozen=True)
class LinguisticRow:
    system_id: str
    pct_repetition: float
    pct_incoherence: float


def unanimous_word_labels(
    tokens: TokenSequence,
    spans_by_annotator: Mapping[str, Sequence[SpanAnnotation]],
    labels: Iterable[str] = ("intrinsic", "extrinsic"),
) -> dict[str, set[int]]:
    """Word indices covered by all annotators with the same label.

    Also reports the "any" pseudo-label: words every annotator covered with
    some span regardless of label agreement.
    """
    if len(spans_by_annotator) != 3:
        raise IncompleteAnnotation(
            *_first_pair(spans_by_annotator),
            detail=f"{len(spans_by_annotator)} annotators, expected 3",
        )
    label_list = list(labels)
    per_label: dict[str, list[set[int]]] = {lab: [] for lab in label_list}
    any_cover: list[set[int]] = []
    for spans in spans_by_annotator.values():
        covered: dict[str, set[int]] = {lab: set() for lab in label_list}
        for span in spans:
            covered[span.label].update(span_to_words(span, tokens))
        for lab in label_list:
            per_label[lab].append(covered[lab])
        any_cover.append(set().union(*covered.values()))
    out = {lab: set.intersection(*per_label[lab]) for lab in label_list}
    out["any"] = set.intersection(*any_cover)
    return out


def doc_flags(
    tokens: TokenSequence,
    spans_by_annotator: Mapping[str, Sequence[SpanAnnotation]],
    judgments: Mapping[str, JudgmentRecord] | None = None,
) -> DocFlags:
    unanimous = unanimous_word_labels(tokens, spans_by_annotator)
    intrinsic = bool(unanimous["intrinsic"])
    extrinsic = bool(unanimous["extrinsic"])
    factual: bool | None = None
    if (intrinsic or extrinsic) and judgments:
        if len(judgments) != 3:
            raise IncompleteAnnotation(
                *_first_pair(spans_by_annotator),
                detail=f"{len(judgments)} verdicts, expected 3",
            )
        factual = all(j.verdict for j in judgments.values())
    return DocFlags(intrinsic=intrinsic, extrinsic=extrinsic, factual=factual)


def all_doc_flags(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
) -> dict[tuple[str, str], DocFlags]:
    """Flags for every pair with a complete hallucination-task triple."""
    index = summary_index(summaries)
    verdicts = annotations.verdicts_by_pair()
    out: dict[tuple[str, str], DocFlags] = {}
    for (doc_id, system_id), by_annotator in sorted(
        annotations.spans_by_pair(TASK_HALLUCINATION).items()
    ):
        if len(by_annotator) != 3:
            raise IncompleteAnnotation(
                doc_id, system_id,
                f"{len(by_annotator)} annotators, expected 3",
            )
        tokens = tokenize(index[(doc_id, system_id)].text)
        out[(doc_id, system_id)] = doc_flags(
            tokens, by_annotator, verdicts.get((doc_id, system_id))
        )
    return out


def system_table(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
    union_mode: str = "doc_or",
) -> list[SystemHalluRow]:
    """One hallucination-percentage row per system.

    union_mode "doc_or" counts a summary in I-union-E when either document
    flag is set; "word_any" instead requires a word covered by all three
    annotators regardless of span label.
    """
    index = summary_index(summaries)
    flags = all_doc_flags(annotations, summaries)
    word_any: dict[tuple[str, str], bool] = {}
    if union_mode == "word_any":
        for (doc_id, system_id), by_annotator in annotations.spans_by_pair(
            TASK_HALLUCINATION
        ).items():
            tokens = tokenize(index[(doc_id, system_id)].text)
            unanimous = unanimous_word_labels(tokens, by_annotator)
            word_any[(doc_id, system_id)] = bool(unanimous["any"])
    elif union_mode != "doc_or":
        raise ValueError(f"unknown union_mode {union_mode!r}")

    rows = []
    for system_id in sorted({s for _, s in flags}):
        pair_flags = [
            (pair, f) for pair, f in sorted(flags.items()) if pair[1] == system_id
        ]
        n = len(pair_flags)
        n_intrinsic = sum(f.intrinsic for _, f in pair_flags)
        n_extrinsic = sum(f.extrinsic for _, f in pair_flags)
        if union_mode == "word_any":
            n_union = sum(word_any[pair] for pair, _ in pair_flags)
        else:
            n_union = sum(f.hallucinated for _, f in pair_flags)
        pct_union = 100.0 * n_union / n
        pct_faithful = 100.0 - pct_union
        has_verdicts = any(f.factual is not None for _, f in pair_flags)
        plus_fact = None
        if has_verdicts:
            n_factual = sum(1 for _, f in pair_flags if f.factual)
            plus_fact = pct_faithful + 100.0 * n_factual / n
        rows.append(
            SystemHalluRow(
                system_id=system_id,
                pct_intrinsic=100.0 * n_intrinsic / n,
                pct_extrinsic=100.0 * n_extrinsic / n,
                pct_union=pct_union,
                pct_faithful=pct_faithful,
                pct_faithful_or_factual=plus_fact,
                pairs=n,
            )
        )
    return rows


def factual_breakdown(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
) -> list[FactualBreakdownRow]:
    """Per-system hallucination percentages split by unanimous factual verdicts."""
    flags = all_doc_flags(annotations, summaries)
    rows = []
    for system_id in sorted({s for _, s in flags}):
        fs = [f for (d, s), f in sorted(flags.items()) if s == system_id]
        n = len(fs)
        has_verdicts = any(f.factual is not None for f in fs)
        if not has_verdicts:
            continue

        def pct(pred) -> float:
            return 100.0 * sum(1 for f in fs if pred(f)) / n

        pct_union = pct(lambda f: f.hallucinated)
        pct_union_factual = pct(lambda f: f.hallucinated and f.factual)
        pct_faithful = 100.0 - pct_union
        rows.append(
            FactualBreakdownRow(
                system_id=system_id,
                pct_faithful=pct_faithful,
                pct_intrinsic=pct(lambda f: f.intrinsic),
                pct_intrinsic_factual=pct(lambda f: f.intrinsic and f.factual),
                pct_extrinsic=pct(lambda f: f.extrinsic),
                pct_extrinsic_factual=pct(lambda f: f.extrinsic and f.factual),
                pct_union=pct_union,
                pct_union_factual=pct_union_factual,
                pct_factual_total=pct_faithful + pct_union_factual,
            )
        )
    return rows


def span_stats(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
    corpus_size: int | None = None,
) -> list[SpanStatsRow]:
    """Span totals pooled over all annotators, averaged per document.

    corpus_size overrides the per-system denominator (the annotated pair
    count) when the corpus is larger than the annotated sample.
    """
    index = summary_index(summaries)
    by_pair = annotations.spans_by_pair(TASK_HALLUCINATION)
    systems = sorted({s for _, s in by_pair})
    rows = []
    for system_id in systems:
        pairs = [p for p in by_pair if p[1] == system_id]
        n_docs = corpus_size if corpus_size is not None else len(pairs)
        totals = {"intrinsic": 0, "extrinsic": 0}
        lengths: list[int] = []
        for pair in pairs:
            tokens = tokenize(index[pair].text)
            for spans in by_pair[pair].values():
                for span in spans:
                    totals[span.label] += 1
                    lengths.append(len(span_to_words(span, tokens)))
        rows.append(
            SpanStatsRow(
                system_id=system_id,
                total_intrinsic=totals["intrinsic"],
                avg_intrinsic=totals["intrinsic"] / n_docs if n_docs else 0.0,
                total_extrinsic=totals["extrinsic"],
                avg_extrinsic=totals["extrinsic"] / n_docs if n_docs else 0.0,
                avg_span_length=sum(lengths) / len(lengths) if lengths else 0.0,
            )
        )
    return rows


def rep_incoh_table(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
) -> list[LinguisticRow]:
    """Percentage of summaries with >= 1 unanimous repetition/incoherence word."""
    index = summary_index(summaries)
    by_pair = annotations.spans_by_pair(TASK_LINGUISTIC)
    rows = []
    for system_id in sorted({s for _, s in by_pair}):
        pairs = [p for p in sorted(by_pair) if p[1] == system_id]
        n = len(pairs)
        marked = {"repetition": 0, "incoherence": 0}
        for pair in pairs:
            by_annotator = by_pair[pair]
            if len(by_annotator) != 3:
                raise IncompleteAnnotation(
                    pair[0], pair[1],
                    f"{len(by_annotator)} annotators, expected 3",
                )
            tokens = tokenize(index[pair].text)
            unanimous = unanimous_word_labels(
                tokens, by_annotator, labels=("repetition", "incoherence")
            )
            for lab in marked:
                if unanimous[lab]:
                    marked[lab] += 1
        rows.append(
            LinguisticRow(
                system_id=system_id,
                pct_repetition=100.0 * marked["repetition"] / n if n else 0.0,
                pct_incoherence=100.0 * marked["incoherence"] / n if n else 0.0,
            )
        )
    return rows


def faithful_labels(
    annotations: AnnotationSet, summaries: Iterable[SummaryRecord]
) -> dict[tuple[str, str], int]:
    """Binary faithful label per annotated pair (1 = faithful)."""
    return {
        pair: int(f.faithful) for pair, f in all_doc_flags(annotations, summaries).items()
    }


def factual_labels(
    annotations: AnnotationSet, summaries: Iterable[SummaryRecord]
) -> dict[tuple[str, str], int]:
    """Binary factual label, defined only on hallucinated pairs with verdicts."""
    return {
        pair: int(f.factual)
        for pair, f in all_doc_flags(annotations, summaries).items()
        if f.factual is not None
    }


def _first_pair(spans_by_annotator: Mapping[str, Sequence[SpanAnnotation]]):
    for spans in spans_by_annotator.values():
        for s in spans:
            return s.doc_id, s.system_id
    return "?", "?"
