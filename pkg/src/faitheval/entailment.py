"""Entailment-based evaluation: 3-class distributions, argmax summary
selection, faithful-label fine-tune export, and k-fold cross-validated
selection.

Ties in classification break toward the pessimistic class (contradiction
over neutral over entailment); ties in selection break toward the
lexicographically smallest system id. Both rules exist to keep regression
runs deterministic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import AnnotationSet, SummaryRecord, summary_index
from .errors import (
    FoldLeakage,
    MissingAnnotation,
    MissingFold,
    MissingScore,
    NoCandidates,
    UnknownSystem,
)
from .gateway import EntailmentScore
from .hallucination import all_doc_flags
from .rouge import RougeTriple, corpus_rouge

Pair = tuple[str, str]

CLASS_ENTAILMENT = "entailment"
CLASS_NEUTRAL = "neutral"
CLASS_CONTRADICTION = "contradiction"

# tie-break order: later entries win exact probability ties
_PESSIMISM = (CLASS_ENTAILMENT, CLASS_NEUTRAL, CLASS_CONTRADICTION)


@dataclass(frozen=True)
class ClassDistribution:
    system_id: str
    pct_entail: float
    pct_neutral: float
    pct_contradict: float
    pairs: int


@dataclass(frozen=True)
class SelectionResult:
    doc_id: str
    chosen_system: str
    chosen_score: float
    candidates_considered: int


@dataclass(frozen=True)
class SelectionEval:
    rouge: RougeTriple
    pct_faithful: float
    pct_faithful_or_factual: float | None
    docs: int


@dataclass(frozen=True)
class FinetunePair:
    doc_id: str
    system_id: str
    summary_text: str
    label: str  # entailment iff annotated faithful
    fold: int


def classify(score: EntailmentScore) -> str:
    by_prob = {
        CLASS_ENTAILMENT: score.p_entail,
        CLASS_NEUTRAL: score.p_neutral,
        CLASS_CONTRADICTION: score.p_contradict,
    }
    best = max(_PESSIMISM, key=lambda c: (by_prob[c], _PESSIMISM.index(c)))
    return best


def class_distribution(
    system_id: str,
    scores: Mapping[Pair, EntailmentScore],
    pairs: Iterable[Pair] | None = None,
) -> ClassDistribution:
    if pairs is None:
        pairs = [p for p in scores if p[1] == system_id]
    wanted = sorted(p for p in pairs if p[1] == system_id)
    counts = {c: 0 for c in _PESSIMISM}
    for pair in wanted:
        if pair not in scores:
            raise MissingScore(pair[0], pair[1])
        counts[classify(scores[pair])] += 1
    n = len(wanted)
    if n == 0:
        raise MissingScore("<any>", system_id)
    return ClassDistribution(
        system_id=system_id,
        pct_entail=100.0 * counts[CLASS_ENTAILMENT] / n,
        pct_neutral=100.0 * counts[CLASS_NEUTRAL] / n,
        pct_contradict=100.0 * counts[CLASS_CONTRADICTION] / n,
        pairs=n,
    )


def select_summary(
    doc_id: str, candidates: Mapping[str, EntailmentScore]
) -> SelectionResult:
    if not candidates:
        raise NoCandidates(doc_id)
    # max p_entail, exact ties to the lexicographically smallest system
    chosen = min(
        candidates, key=lambda sys_id: (-candidates[sys_id].p_entail, sys_id)
    )
    return SelectionResult(
        doc_id=doc_id,
        chosen_system=chosen,
        chosen_score=candidates[chosen].p_entail,
        candidates_considered=len(candidates),
    )


def select_all(
    scores: Mapping[Pair, EntailmentScore],
    doc_ids: Iterable[str],
    systems: Sequence[str],
) -> list[SelectionResult]:
    out = []
    for doc_id in sorted(set(doc_ids)):
        candidates = {
            sys_id: scores[(doc_id, sys_id)]
            for sys_id in systems
            if (doc_id, sys_id) in scores
        }
        out.append(select_summary(doc_id, candidates))
    return out


def selection_eval(
    selections: Iterable[SelectionResult],
    references: Mapping[str, str],
    summaries: Iterable[SummaryRecord],
    annotations: AnnotationSet,
) -> SelectionEval:
    summaries = list(summaries)
    index = summary_index(summaries)
    flags = all_doc_flags(annotations, summaries)
    chosen_texts: dict[str, str] = {}
    chosen_flags = []
    for sel in sorted(selections, key=lambda s: s.doc_id):
        pair = (sel.doc_id, sel.chosen_system)
        if pair not in index:
            raise UnknownSystem(sel.doc_id, sel.chosen_system)
        chosen_texts[sel.doc_id] = index[pair].text
        if pair not in flags:
            raise MissingAnnotation(sel.doc_id, sel.chosen_system)
        chosen_flags.append(flags[pair])
    n = len(chosen_flags)
    rouge = corpus_rouge(chosen_texts, references)
    n_faithful = sum(1 for f in chosen_flags if f.faithful)
    pct_faithful = 100.0 * n_faithful / n
    plus_fact = None
    if any(f.factual is not None for f in chosen_flags):
        n_factual = sum(1 for f in chosen_flags if f.factual)
        plus_fact = pct_faithful + 100.0 * n_factual / n
    return SelectionEval(
        rouge=rouge,
        pct_faithful=pct_faithful,
        pct_faithful_or_factual=plus_fact,
        docs=n,
    )


def fold_assignment(doc_ids: Iterable[str], k: int, seed: int) -> dict[str, int]:
    """Deterministic document-keyed folds: lexicographic sort, seeded shuffle,
    round-robin."""
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    docs = sorted(set(doc_ids))
    rng = random.Random(seed)
    rng.shuffle(docs)
    return {doc_id: i % k for i, doc_id in enumerate(docs)}


def export_finetune(
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
    k: int,
    seed: int,
) -> list[FinetunePair]:
    summaries = list(summaries)
    index = summary_index(summaries)
    flags = all_doc_flags(annotations, summaries)
    folds = fold_assignment((doc for doc, _ in flags), k, seed)
    out = []
    for (doc_id, system_id), f in sorted(flags.items()):
        out.append(
            FinetunePair(
                doc_id=doc_id,
                system_id=system_id,
                summary_text=index[(doc_id, system_id)].text,
                label=CLASS_ENTAILMENT if f.faithful else CLASS_NEUTRAL,
                fold=folds[doc_id],
            )
        )
    return out


def crossval_eval(
    fold_scores: Mapping[int, Mapping[Pair, EntailmentScore]],
    annotations: AnnotationSet,
    summaries: Iterable[SummaryRecord],
    references: Mapping[str, str],
    systems: Sequence[str],
    k: int,
    seed: int,
) -> SelectionEval:
    """Per-fold selection on held-out docs, aggregated over the union.

    Every fold's score table must cover only that fold's documents; an
    out-of-fold key means the backend saw eval docs during training.
    """
    summaries = list(summaries)
    flags = all_doc_flags(annotations, summaries)
    folds = fold_assignment((doc for doc, _ in flags), k, seed)
    selections: list[SelectionResult] = []
    for fold in range(k):
        if fold not in fold_scores:
            raise MissingFold(fold)
        scores = fold_scores[fold]
        held_out = sorted(d for d, f in folds.items() if f == fold)
        for doc_id, _ in scores:
            if folds.get(doc_id) != fold:
                raise FoldLeakage(fold, doc_id)
        selections.extend(select_all(scores, held_out, systems))
    return selection_eval(selections, references, summaries, annotations)
