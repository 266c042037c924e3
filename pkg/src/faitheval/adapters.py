"""Loaders for the publicly released annotation CSVs.

The release ships two CSVs (hallucination spans and factuality judgments)
keyed by BBC article id and uppercase-ish system names. This module maps them
onto the toolkit's canonical records; nothing here is needed for the shipped
fixtures.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .corpus import (
    AnnotationSet,
    DocumentRecord,
    JudgmentRecord,
    SpanAnnotation,
    SummaryRecord,
    ingest_documents,
)
from .errors import ConfigError, ParseError

HALLUCINATION_CSV = "hallucination_annotations_xsum_summaries.csv"
FACTUALITY_CSV = "factuality_annotations_xsum_summaries.csv"
REFERENCES_FILE = "xsum_references.jsonl"

_TRUE = {"yes", "true", "1", "factual", "y"}
_FALSE = {"no", "false", "0", "not factual", "n"}


def _pick(row: dict, *names: str) -> str:
    for name in names:
        if name in row and row[name] is not None:
            return row[name]
    raise ParseError(0, f"none of the columns {names} present; got {sorted(row)}")


def _norm_system(raw: str) -> str:
    return raw.strip().lower()


def load_released_dataset(
    data_dir: str | Path,
) -> tuple[AnnotationSet, list[SummaryRecord]]:
    """Read the released CSV pair into an AnnotationSet plus summary records.

    Summary texts are taken from the hallucination CSV (each row repeats the
    full summary). Span offsets index into that exact text.
    """
    data_dir = Path(data_dir)
    hall_path = data_dir / HALLUCINATION_CSV
    fact_path = data_dir / FACTUALITY_CSV
    if not hall_path.exists() or not fact_path.exists():
        raise ConfigError(
            f"expected {HALLUCINATION_CSV} and {FACTUALITY_CSV} in {data_dir}"
        )

    spans: list[SpanAnnotation] = []
    participations: set[tuple[str, str, str, str]] = set()
    texts: dict[tuple[str, str], str] = {}
    with open(hall_path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            doc_id = _pick(row, "bbcid", "doc_id").strip()
            system = _norm_system(_pick(row, "system", "system_id"))
            worker = _pick(row, "wid", "worker_id", "annotator_id").strip()
            summary = _pick(row, "summary", "text")
            texts.setdefault((doc_id, system), summary)
            participations.add((doc_id, system, worker, "hallucination"))
            label = _pick(row, "hallucination_type", "label").strip().lower()
            if label in ("", "null", "none", "no hallucination"):
                continue
            start = int(_pick(row, "hallucinated_span_start", "char_start"))
            end = int(_pick(row, "hallucinated_span_end", "char_end"))
            spans.append(
                SpanAnnotation(doc_id, system, worker, label, start, end)
            )

    judgments: list[JudgmentRecord] = []
    with open(fact_path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            doc_id = _pick(row, "bbcid", "doc_id").strip()
            system = _norm_system(_pick(row, "system", "system_id"))
            worker = _pick(row, "wid", "worker_id", "annotator_id").strip()
            raw = _pick(row, "is_factual", "verdict").strip().lower()
            if raw in _TRUE:
                verdict = True
            elif raw in _FALSE:
                verdict = False
            else:
                raise ParseError(0, f"unrecognized is_factual value {raw!r}")
            judgments.append(JudgmentRecord(doc_id, system, worker, verdict))
            texts.setdefault((doc_id, system), _pick(row, "summary", "text"))

    summaries = [
        SummaryRecord(doc_id, system, text)
        for (doc_id, system), text in sorted(texts.items())
    ]
    annotations = AnnotationSet.build(spans, judgments, participations)
    return annotations, summaries


def load_released_references(data_dir: str | Path) -> dict[str, str]:
    """Gold single-sentence summaries keyed by article id, if provided."""
    path = Path(data_dir) / REFERENCES_FILE
    if not path.exists():
        raise ConfigError(f"no reference file at {path}")
    return {d.doc_id: d.text for d in ingest_documents(path)}


def released_documents(summaries) -> list[DocumentRecord]:
    """Placeholder documents: ids only, for stages that never read doc text."""
    seen = sorted({s.doc_id for s in summaries})
    return [DocumentRecord(doc_id, "") for doc_id in seen]
