"""ROUGE-1/2 (clipped n-gram overlap) and ROUGE-L (longest common subsequence).

All scores are F1-oriented precision/recall triples in [0, 1]; per-system
numbers are arithmetic means over document pairs and multiplied by 100 only
at presentation time.  Matching is lowercase-exact over the corpus
tokenizer's surfaces: no stemming, no stopword removal.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .corpus import TokenSequence, tokenize
from .errors import MissingReference


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_pr(precision: float, recall: float) -> "PrfScore":
        denom = precision + recall
        f1 = 2 * precision * recall / denom if denom > 0 else 0.0
        return PrfScore(precision=precision, recall=recall, f1=f1)


ZERO = PrfScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RougeTriple:
    r1: PrfScore
    r2: PrfScore
    rl: PrfScore


def _surfaces(seq: TokenSequence | list[str] | str) -> list[str]:
    if isinstance(seq, str):
        return tokenize(seq).surfaces()
    if isinstance(seq, TokenSequence):
        return seq.surfaces()
    return list(seq)


def rouge_n(candidate, reference, n: int) -> PrfScore:
    """Clipped n-gram multiset overlap between candidate and reference."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(_surfaces(candidate), n)
    ref = _ngrams(_surfaces(reference), n)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    if cand_total == 0 or ref_total == 0:
        return ZERO
    overlap = sum((cand & ref).values())
    return PrfScore.from_pr(overlap / cand_total, overlap / ref_total)


def rouge_l(candidate, reference) -> PrfScore:
    """LCS-based precision/recall over token surfaces."""
    cand = _surfaces(candidate)
    ref = _surfaces(reference)
    if not cand or not ref:
        return ZERO
    length = lcs_length(cand, ref)
    return PrfScore.from_pr(length / len(cand), length / len(ref))


def lcs_length(a: list[str], b: list[str]) -> int:
    """Classic dynamic-programming LCS, O(len(a) * len(b))."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_triple(candidate, reference) -> RougeTriple:
    cand = _surfaces(candidate)
    ref = _surfaces(reference)
    return RougeTriple(
        r1=rouge_n(cand, ref, 1),
        r2=rouge_n(cand, ref, 2),
        rl=rouge_l(cand, ref),
    )


def corpus_rouge(
    candidates: Mapping[str, TokenSequence | list[str] | str],
    references: Mapping[str, TokenSequence | list[str] | str],
) -> RougeTriple:
    """Mean per-pair ROUGE over all candidate documents.

    Every candidate doc_id must have a reference; extra references are ignored.
    """
    if not candidates:
        raise ValueError("corpus_rouge needs at least one candidate/reference pair")
    triples = []
    for doc_id in sorted(candidates):
        if doc_id not in references:
            raise MissingReference(doc_id)
        triples.append(rouge_triple(candidates[doc_id], references[doc_id]))
    return RougeTriple(
        r1=_mean_prf([t.r1 for t in triples]),
        r2=_mean_prf([t.r2 for t in triples]),
        rl=_mean_prf([t.rl for t in triples]),
    )


def _mean_prf(scores: list[PrfScore]) -> PrfScore:
    n = len(scores)
    return PrfScore(
        precision=sum(s.precision for s in scores) / n,
        recall=sum(s.recall for s in scores) / n,
        f1=sum(s.f1 for s in scores) / n,
    )


def _ngrams(surfaces: list[str], n: int) -> Counter:
    return Counter(
        tuple(surfaces[i:i + n]) for i in range(len(surfaces) - n + 1)
    )
