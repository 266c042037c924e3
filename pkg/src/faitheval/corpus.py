"""Data model and ingestion for documents, summaries and human annotations.

The word grain used everywhere downstream comes from :func:`tokenize`:
lowercase, split on unicode whitespace, each contiguous run of unicode
punctuation is its own token, and a lone apostrophe absorbs a trailing
clitic "s" (so ``Goldsmith's`` becomes ``goldsmith`` + ``'s``).  The rule
is deliberately small so that word-level statistics are reproducible and
so it can be re-implemented verbatim in the annotation frontend.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    DuplicateKey,
    EmptyField,
    IllegalLabel,
    OverlappingSpans,
    ParseError,
    SpanOutOfRange,
    UnknownSystem,
    VacuousSpan,
)

TASK_HALLUCINATION = "hallucination"
TASK_FACTUALITY = "factuality"
TASK_LINGUISTIC = "linguistic"
TASKS = (TASK_FACTUALITY, TASK_HALLUCINATION, TASK_LINGUISTIC)

HALLUCINATION_LABELS = frozenset({"intrinsic", "extrinsic"})
LINGUISTIC_LABELS = frozenset({"repetition", "incoherence"})

SPAN_TASK_LABELS = {
    TASK_HALLUCINATION: HALLUCINATION_LABELS,
    TASK_LINGUISTIC: LINGUISTIC_LABELS,
}

ANNOTATION_COLUMNS = (
    "doc_id",
    "system_id",
    "annotator_id",
    "task",
    "label",
    "char_start",
    "char_end",
    "verdict",
    "evidence_note",
)

_APOSTROPHES = frozenset({"'", "’"})


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    text: str


@dataclass(frozen=True)
class SummaryRecord:
    doc_id: str
    system_id: str
    text: str


@dataclass(frozen=True)
class Token:
    surface: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]


@dataclass(frozen=True, order=True)
class SpanAnnotation:
    doc_id: str
    system_id: str
    annotator_id: str
    label: str
    char_start: int
    char_end: int

    @property
    def task(self) -> str:
        return TASK_HALLUCINATION if self.label in HALLUCINATION_LABELS else TASK_LINGUISTIC

    @property
    def pair(self) -> tuple[str, str]:
        return (self.doc_id, self.system_id)


@dataclass(frozen=True, order=True)
class JudgmentRecord:
    doc_id: str
    system_id: str
    annotator_id: str
    verdict: bool
    evidence_note: str = ""

    @property
    def pair(self) -> tuple[str, str]:
        return (self.doc_id, self.system_id)


# (doc_id, system_id, annotator_id, task): one annotator's submission of one
# span task, recorded even when the submission contained zero spans so that
# "judged faithful/clean" is distinguishable from "not annotated yet".
ParticipationKey = tuple[str, str, str, str]


@dataclass(frozen=True)
class AnnotationSet:
    """Validated spans and verdicts, canonically ordered."""

    spans: tuple[SpanAnnotation, ...]
    judgments: tuple[JudgmentRecord, ...]
    participations: frozenset[ParticipationKey]
    annotators_per_item: int = 3

    @staticmethod
    def build(
        spans: Iterable[SpanAnnotation],
        judgments: Iterable[JudgmentRecord],
        participations: Iterable[ParticipationKey] = (),
        annotators_per_item: int = 3,
    ) -> "AnnotationSet":
        """Canonicalize ordering and add implicit participations from spans."""
        span_tuple = tuple(sorted(spans))
        parts = set(participations)
        parts.update((s.doc_id, s.system_id, s.annotator_id, s.task) for s in span_tuple)
        return AnnotationSet(
            spans=span_tuple,
            judgments=tuple(sorted(judgments)),
            participations=frozenset(parts),
            annotators_per_item=annotators_per_item,
        )

    # -- index helpers ---------------------------------------------------

    def spans_by_pair(self, task: str) -> dict[tuple[str, str], dict[str, list[SpanAnnotation]]]:
        """{(doc, system): {annotator: [spans]}} for one span task, empty lists
        included for annotators who submitted nothing."""
        out: dict[tuple[str, str], dict[str, list[SpanAnnotation]]] = {}
        for doc_id, system_id, annotator_id, part_task in self.participations:
            if part_task == task:
                out.setdefault((doc_id, system_id), {}).setdefault(annotator_id, [])
        for s in self.spans:
            if s.task == task:
                out[s.pair][s.annotator_id].append(s)
        return out

    def verdicts_by_pair(self) -> dict[tuple[str, str], dict[str, JudgmentRecord]]:
        out: dict[tuple[str, str], dict[str, JudgmentRecord]] = {}
        for j in self.judgments:
            out.setdefault(j.pair, {})[j.annotator_id] = j
        return out

    def systems(self) -> list[str]:
        seen = {p[1] for p in self.participations}
        seen.update(j.system_id for j in self.judgments)
        return sorted(seen)

    def pairs(self, task: str) -> list[tuple[str, str]]:
        if task == TASK_FACTUALITY:
            return sorted({j.pair for j in self.judgments})
        return sorted({(d, s) for d, s, _, t in self.participations if t == task})


def ingest_documents(path: str | Path, format: str = "jsonl") -> list[DocumentRecord]:
    """Read a document file; one record per line, keyed by unique doc_id."""
    rows = _read_keyed_file(path, format, ("doc_id", "text"))
    records: list[DocumentRecord] = []
    seen: set[str] = set()
    for line_no, row in rows:
        doc_id, text = row["doc_id"], row["text"]
        _require_nonempty(doc_id, "doc_id", line_no)
        _require_nonempty(text, "text", line_no)
        if doc_id in seen:
            raise DuplicateKey(doc_id)
        seen.add(doc_id)
        records.append(DocumentRecord(doc_id=doc_id, text=text))
    return records


def ingest_summaries(
    path: str | Path,
    format: str = "jsonl",
    documents: Sequence[DocumentRecord] | None = None,
) -> list[SummaryRecord]:
    """Read a summary file, one (doc_id, system_id) pair per line.

    When `documents` is given, every summary must reference a known doc_id.
    """
    rows = _read_keyed_file(path, format, ("doc_id", "system_id", "text"))
    known = {d.doc_id for d in documents} if documents is not None else None
    records: list[SummaryRecord] = []
    seen: set[tuple[str, str]] = set()
    for line_no, row in rows:
        doc_id, system_id, text = row["doc_id"], row["system_id"], row["text"]
        _require_nonempty(doc_id, "doc_id", line_no)
        _require_nonempty(system_id, "system_id", line_no)
        _require_nonempty(text, "text", line_no)
        key = (doc_id, system_id)
        if key in seen:
            raise DuplicateKey(key)
        seen.add(key)
        if known is not None and doc_id not in known:
            raise ParseError(line_no, f"summary references unknown doc_id {doc_id!r}")
        records.append(SummaryRecord(doc_id=doc_id, system_id=system_id, text=text))
    return records


def summary_index(summaries: Iterable[SummaryRecord]) -> dict[tuple[str, str], SummaryRecord]:
    return {(s.doc_id, s.system_id): s for s in summaries}


def tokenize(text: str) -> TokenSequence:
    """Lowercased word tokens with offsets into the original string."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        if _is_punct(text[i]):
            while i < n and _is_punct(text[i]):
                i += 1
            # a lone apostrophe keeps a clitic "s" attached: goldsmith | 's
            if (
                i - start == 1
                and text[start] in _APOSTROPHES
                and i < n
                and text[i] in ("s", "S")
                and (i + 1 >= n or not text[i + 1].isalnum())
            ):
                i += 1
        else:
            while i < n and not text[i].isspace() and not _is_punct(text[i]):
                i += 1
        tokens.append(Token(surface=text[start:i].lower(), char_start=start, char_end=i))
    return TokenSequence(tuple(tokens))


def span_to_words(span: SpanAnnotation, tokens: TokenSequence) -> set[int]:
    """Indices of tokens whose character interval overlaps the span by >= 1 char."""
    limit = tokens[len(tokens) - 1].char_end if len(tokens) else 0
    if span.char_start < 0 or span.char_end <= span.char_start or span.char_start >= limit:
        raise SpanOutOfRange(
            f"span [{span.char_start}, {span.char_end}) is outside the tokenized text"
        )
    return {
        i
        for i, t in enumerate(tokens)
        if t.char_start < span.char_end and span.char_start < t.char_end
    }


def ingest_annotations(
    path: str | Path,
    summaries: Iterable[SummaryRecord],
    column_map: Mapping[str, str] | None = None,
    annotators_per_item: int = 3,
) -> AnnotationSet:
    """Read an annotation TSV and validate it against the summary corpus.

    `column_map` maps canonical field names (see ANNOTATION_COLUMNS) to the
    column names used in the file; identity when omitted.  Rows with a label
    are spans; rows with a verdict are factuality judgments; rows with
    neither record that an annotator submitted an empty span task.
    """
    index = summary_index(summaries)
    colmap = dict(column_map) if column_map else {c: c for c in ANNOTATION_COLUMNS}
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(1, "missing header row")
    header = lines[0].split("\t")
    positions: dict[str, int] = {}
    for canonical, actual in colmap.items():
        if actual in header:
            positions[canonical] = header.index(actual)

    spans: list[SpanAnnotation] = []
    judgments: list[JudgmentRecord] = []
    participations: set[ParticipationKey] = set()
    seen_verdicts: set[tuple[str, str, str]] = set()

    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split("\t")

        def get(name: str, required: bool = True) -> str:
            pos = positions.get(name)
            if pos is None or pos >= len(cells):
                if required:
                    raise ParseError(line_no, f"missing column for field {name!r}")
                return ""
            return unescape_field(cells[pos])

        doc_id = get("doc_id")
        system_id = get("system_id")
        annotator_id = get("annotator_id")
        for fname, value in (("doc_id", doc_id), ("system_id", system_id),
                             ("annotator_id", annotator_id)):
            _require_nonempty(value, fname, line_no)
        if (doc_id, system_id) not in index:
            raise UnknownSystem(doc_id, system_id)

        task = get("task", required=False)
        label = get("label", required=False)
        verdict = get("verdict", required=False)

        if verdict:
            if task and task != TASK_FACTUALITY:
                raise ParseError(line_no, f"verdict on non-factuality task {task!r}")
            if verdict not in ("true", "false"):
                raise ParseError(line_no, f"verdict must be true/false, got {verdict!r}")
            key = (doc_id, system_id, annotator_id)
            if key in seen_verdicts:
                raise DuplicateKey(key)
            seen_verdicts.add(key)
            judgments.append(
                JudgmentRecord(
                    doc_id=doc_id,
                    system_id=system_id,
                    annotator_id=annotator_id,
                    verdict=verdict == "true",
                    evidence_note=get("evidence_note", required=False),
                )
            )
        elif label:
            task = task or (
                TASK_HALLUCINATION if label in HALLUCINATION_LABELS else TASK_LINGUISTIC
            )
            if task not in SPAN_TASK_LABELS:
                raise ParseError(line_no, f"unknown span task {task!r}")
            if label not in SPAN_TASK_LABELS[task]:
                raise IllegalLabel(label, task)
            try:
                char_start = int(get("char_start"))
                char_end = int(get("char_end"))
            except ValueError as exc:
                raise ParseError(line_no, f"non-integer span offsets: {exc}") from exc
            spans.append(
                SpanAnnotation(
                    doc_id=doc_id,
                    system_id=system_id,
                    annotator_id=annotator_id,
                    label=label,
                    char_start=char_start,
                    char_end=char_end,
                )
            )
        else:
            # participation marker: the annotator submitted zero spans
            if task not in SPAN_TASK_LABELS:
                raise ParseError(line_no, f"marker row needs a span task, got {task!r}")
            participations.add((doc_id, system_id, annotator_id, task))

    validate_spans(spans, index)
    return AnnotationSet.build(
        spans, judgments, participations, annotators_per_item=annotators_per_item
    )


def validate_spans(
    spans: Iterable[SpanAnnotation],
    summaries: Mapping[tuple[str, str], SummaryRecord],
) -> None:
    """Range, tokenization and per-annotator overlap checks."""
    grouped: dict[tuple[str, str, str, str], list[SpanAnnotation]] = {}
    for s in spans:
        text = summaries[(s.doc_id, s.system_id)].text
        if not (0 <= s.char_start < s.char_end <= len(text)):
            raise SpanOutOfRange(
                f"span [{s.char_start}, {s.char_end}) outside summary of length "
                f"{len(text)} for ({s.doc_id!r}, {s.system_id!r})"
            )
        if not span_to_words(s, tokenize(text)):
            raise VacuousSpan(
                f"span [{s.char_start}, {s.char_end}) on ({s.doc_id!r}, "
                f"{s.system_id!r}) covers no token"
            )
        grouped.setdefault((s.doc_id, s.system_id, s.annotator_id, s.task), []).append(s)
    for (doc_id, system_id, annotator_id, _task), group in grouped.items():
        group.sort(key=lambda s: s.char_start)
        for a, b in zip(group, group[1:]):
            if b.char_start < a.char_end:
                raise OverlappingSpans(annotator_id, doc_id, system_id)


def export_annotations(annotations: AnnotationSet, path: str | Path | None = None) -> str:
    """Canonical TSV serialization; byte-stable for a given set."""
    span_keys = {
        (s.doc_id, s.system_id, s.annotator_id, s.task) for s in annotations.spans
    }
    rows: list[tuple] = []
    for s in annotations.spans:
        rows.append(
            (s.doc_id, s.system_id, s.task, s.annotator_id, s.char_start, s.char_end,
             s.label, "", "")
        )
    for key in annotations.participations - span_keys:
        doc_id, system_id, annotator_id, task = key
        rows.append((doc_id, system_id, task, annotator_id, -1, -1, "", "", ""))
    for j in annotations.judgments:
        rows.append(
            (j.doc_id, j.system_id, TASK_FACTUALITY, j.annotator_id, -1, -1, "",
             "true" if j.verdict else "false", j.evidence_note)
        )
    rows.sort()
    lines = ["\t".join(ANNOTATION_COLUMNS)]
    for doc_id, system_id, task, annotator_id, start, end, label, verdict, note in rows:
        lines.append(
            "\t".join(
                (
                    escape_field(doc_id),
                    escape_field(system_id),
                    escape_field(annotator_id),
                    task,
                    label,
                    "" if start < 0 else str(start),
                    "" if end < 0 else str(end),
                    verdict,
                    escape_field(note),
                )
            )
        )
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def escape_field(value: str) -> str:
    """Make any unicode string safe as a single TSV cell."""
    return (
        value.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def unescape_field(value: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _require_nonempty(value: str, fname: str, line_no: int) -> None:
    if value == "":
        raise EmptyField(fname, line_no)


def _read_keyed_file(
    path: str | Path, format: str, fields: tuple[str, ...]
) -> list[tuple[int, dict[str, str]]]:
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    rows: list[tuple[int, dict[str, str]]] = []
    if format == "jsonl":
        for line_no, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, str(exc)) from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "expected a JSON object")
            missing = [f for f in fields if f not in obj]
            if missing:
                raise ParseError(line_no, f"missing fields: {missing}")
            rows.append((line_no, {f: str(obj[f]) for f in fields}))
    elif format == "tsv":
        lines = raw.splitlines()
        if not lines:
            raise ParseError(1, "missing header row")
        header = lines[0].split("\t")
        missing = [f for f in fields if f not in header]
        if missing:
            raise ParseError(1, f"missing columns: {missing}")
        pos = {f: header.index(f) for f in fields}
        for line_no, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) < len(header):
                raise ParseError(line_no, "short row")
            rows.append(
                (line_no, {f: unescape_field(cells[pos[f]]) for f in fields})
            )
    else:
        raise ValueError(f"unknown format {format!r}")
    return rows
