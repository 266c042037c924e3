"""Question-answering round-trip consistency.

Questions generated from a summary are answered against the source document;
a summary is consistent to the extent the two answers agree after
normalization. An empty reading-comprehension answer means "unanswerable from
the source" and never counts as a match.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import DocumentRecord, SummaryRecord
from .errors import MissingDocument, NoQuestions

ARTICLES = frozenset(("a", "an", "the"))

MATCH_EXACT = "exact"
MATCH_TOKEN_F1 = "token_f1"


@dataclass(frozen=True)
class QaVerdict:
    doc_id: str
    system_id: str
    q_index: int
    expected_answer: str
    rc_answer: str
    matched: bool


@dataclass(frozen=True)
class QaAccuracy:
    system_id: str
    questions: int
    matched: int
    accuracy: float  # percentage


def normalize_answer(text: str) -> str:
    """Lowercase, drop unicode punctuation, drop whole-word articles,
    collapse whitespace. Deleting punctuation before the article pass keeps
    the function idempotent ("a-n" collapses to "an" and is then removed)."""
    lowered = text.lower()
    no_punct = "".join(
        ch for ch in lowered if not unicodedata.category(ch).startswith("P")
    )
    words = [w for w in no_punct.split() if w not in ARTICLES]
    return " ".join(words)


def token_f1(expected: str, candidate: str) -> float:
    expected_tokens = normalize_answer(expected).split()
    candidate_tokens = normalize_answer(candidate).split()
    if not expected_tokens or not candidate_tokens:
        return 1.0 if expected_tokens == candidate_tokens else 0.0
    common = 0
    remaining = list(expected_tokens)
    for tok in candidate_tokens:
        if tok in remaining:
            remaining.remove(tok)
            common += 1
    if common == 0:
        return 0.0
    precision = common / len(candidate_tokens)
    recall = common / len(expected_tokens)
    return 2 * precision * recall / (precision + recall)


def answers_match(
    expected: str,
    rc_answer: str,
    mode: str = MATCH_EXACT,
    f1_threshold: float = 0.5,
) -> bool:
    if rc_answer == "":
        return False  # no answer from the source is always a failure
    if mode == MATCH_EXACT:
        return normalize_answer(expected) == normalize_answer(rc_answer)
    if mode == MATCH_TOKEN_F1:
        return token_f1(expected, rc_answer) >= f1_threshold
    raise ValueError(f"unknown match mode {mode!r}")


def run_roundtrip(
    summaries: Iterable[SummaryRecord],
    documents: Iterable[DocumentRecord],
    scorer,
    mode: str = MATCH_EXACT,
    f1_threshold: float = 0.5,
) -> list[QaVerdict]:
    """Generate questions per summary, answer them against the source, and
    record per-question match verdicts."""
    doc_texts = {d.doc_id: d.text for d in documents}
    verdicts: list[QaVerdict] = []
    for summary in sorted(set(summaries), key=lambda s: (s.doc_id, s.system_id)):
        if summary.doc_id not in doc_texts:
            raise MissingDocument(summary.doc_id)
        qa_pairs = scorer.request(
            "qg",
            {
                "doc_id": summary.doc_id,
                "system_id": summary.system_id,
                "summary": summary.text,
            },
        )
        for pair in qa_pairs:  # zero pairs: the summary contributes nothing
            rc = scorer.request(
                "rc",
                {
                    "doc_id": summary.doc_id,
                    "system_id": summary.system_id,
                    "q_index": pair.q_index,
                    "question": pair.question,
                    "context": doc_texts[summary.doc_id],
                },
            )
            verdicts.append(
                QaVerdict(
                    doc_id=summary.doc_id,
                    system_id=summary.system_id,
                    q_index=pair.q_index,
                    expected_answer=pair.answer,
                    rc_answer=rc.rc_answer,
                    matched=answers_match(
                        pair.answer, rc.rc_answer, mode, f1_threshold
                    ),
                )
            )
    return verdicts


def qa_accuracy(
    verdicts: Iterable[QaVerdict],
    systems: Sequence[str] | None = None,
) -> dict[str, QaAccuracy]:
    """Percentage of questions whose answers round-tripped, per system.

    The denominator counts questions, not summaries."""
    grouped: dict[str, list[QaVerdict]] = {}
    for verdict in verdicts:
        grouped.setdefault(verdict.system_id, []).append(verdict)
    wanted = sorted(grouped) if systems is None else list(systems)
    out: dict[str, QaAccuracy] = {}
    for system_id in wanted:
        rows = grouped.get(system_id, [])
        if not rows:
            raise NoQuestions(system_id)
        matched = sum(1 for v in rows if v.matched)
        out[system_id] = QaAccuracy(
            system_id=system_id,
            questions=len(rows),
            matched=matched,
            accuracy=100.0 * matched / len(rows),
        )
    return out
