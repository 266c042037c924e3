"""Annotation collection service: task queues, three-rater submissions, and
canonical exports, persisted as an append-only event log.

Every mutation is appended to events.jsonl before it touches in-memory state;
replaying the log from an empty store reconstructs the exact same state, and
`compact` folds the log into a snapshot. Pilot projects collect data normally
but are excluded from exports unless asked for.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import parse_qs, urlparse

from .corpus import (
    AnnotationSet,
    DocumentRecord,
    JudgmentRecord,
    SPAN_TASK_LABELS,
    SpanAnnotation,
    SummaryRecord,
    TASK_FACTUALITY,
    TASK_HALLUCINATION,
    TASKS,
    escape_field,
    export_annotations,
    summary_index,
    tokenize,
    unescape_field,
    validate_spans,
)
from .errors import (
    AlreadySubmitted,
    DataError,
    FaithEvalError,
    FilterViolation,
    IllegalLabel,
    NotAssigned,
    ServiceError,
    UnknownPair,
    UnknownTask,
)
from .hallucination import unanimous_word_labels

STATUS_OPEN = "open"
STATUS_ASSIGNED = "assigned"
STATUS_DONE = "done"

EVENTS_FILE = "events.jsonl"
SNAPSHOT_FILE = "snapshot.json"

TASK_WIRE_COLUMNS = (
    "task_id", "project_id", "doc_id", "system_id", "task_type", "status",
    "summary_text", "document_text",
)


@dataclass
class Assignment:
    task_id: str
    annotator_id: str
    issued_at: float
    submitted: bool = False


@dataclass
class TaskRecord:
    task_id: str
    project_id: str
    doc_id: str
    system_id: str
    task_type: str
    assignments: dict[str, Assignment] = field(default_factory=dict)
    spans: dict[str, list[SpanAnnotation]] = field(default_factory=dict)
    verdicts: dict[str, JudgmentRecord] = field(default_factory=dict)

    @property
    def submissions(self) -> int:
        return len(self.spans) + len(self.verdicts)

    @property
    def outstanding(self) -> int:
        return sum(1 for a in self.assignments.values() if not a.submitted)

    def status(self, annotators_per_task: int) -> str:
        if self.submissions >= annotators_per_task:
            return STATUS_DONE
        if self.assignments:
            return STATUS_ASSIGNED
        return STATUS_OPEN


def task_id_for(project_id: str, task_type: str, doc_id: str, system_id: str) -> str:
    """Content-derived id so re-created batches are idempotent."""
    key = "\n".join((project_id, task_type, doc_id, system_id))
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


class AnnotationStore:
    """Event-sourced store behind the annotation service.

    A single lock serializes every mutation together with its log append, so
    no submission can be lost or interleaved; reads take the same lock
    briefly and return copies.
    """

    def __init__(
        self,
        summaries: Iterable[SummaryRecord],
        documents: Iterable[DocumentRecord] = (),
        data_dir: str | Path | None = None,
        annotators_per_task: int = 3,
        clock: Callable[[], float] = time.time,
    ):
        self._summaries = summary_index(summaries)
        self._documents = {d.doc_id: d.text for d in documents}
        self._annotators_per_task = annotators_per_task
        self._clock = clock
        self._lock = threading.RLock()
        self._projects: dict[str, bool] = {}  # project_id -> pilot flag
        self._tasks: dict[str, TaskRecord] = {}
        self._log_path: Path | None = None
        self._log_handle = None
        if data_dir is not None:
            data_dir = Path(data_dir)
            data_dir.mkdir(parents=True, exist_ok=True)
            self._log_path = data_dir / EVENTS_FILE
            self._snapshot_path = data_dir / SNAPSHOT_FILE
            self._load()
            self._log_handle = open(self._log_path, "a", encoding="utf-8")

    # -- persistence -------------------------------------------------------

    def _load(self) -> None:
        if self._snapshot_path.exists():
            snapshot = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            for event in snapshot["events"]:
                self._apply(event)
        if self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        self._apply(json.loads(line))

    def _record(self, event: dict) -> None:
        """Append to the log, then apply; crash between the two replays fine."""
        if self._log_handle is not None:
            self._log_handle.write(json.dumps(event, sort_keys=True) + "\n")
            self._log_handle.flush()
        self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "project_created":
            self._projects[event["project_id"]] = bool(event["pilot"])
        elif kind == "batch_created":
            for doc_id, system_id in event["pairs"]:
                tid = task_id_for(
                    event["project_id"], event["task_type"], doc_id, system_id
                )
                if tid not in self._tasks:
                    self._tasks[tid] = TaskRecord(
                        task_id=tid,
                        project_id=event["project_id"],
                        doc_id=doc_id,
                        system_id=system_id,
                        task_type=event["task_type"],
                    )
        elif kind == "assigned":
            task = self._tasks[event["task_id"]]
            task.assignments[event["annotator_id"]] = Assignment(
                task_id=task.task_id,
                annotator_id=event["annotator_id"],
                issued_at=event["issued_at"],
            )
        elif kind == "spans_submitted":
            task = self._tasks[event["task_id"]]
            annotator_id = event["annotator_id"]
            task.spans[annotator_id] = [
                SpanAnnotation(
                    doc_id=task.doc_id,
                    system_id=task.system_id,
                    annotator_id=annotator_id,
                    label=label,
                    char_start=start,
                    char_end=end,
                )
                for label, start, end in event["spans"]
            ]
            task.assignments[annotator_id].submitted = True
        elif kind == "verdict_submitted":
            task = self._tasks[event["task_id"]]
            annotator_id = event["annotator_id"]
            task.verdicts[annotator_id] = JudgmentRecord(
                doc_id=task.doc_id,
                system_id=task.system_id,
                annotator_id=annotator_id,
                verdict=bool(event["verdict"]),
                evidence_note=event["note"],
            )
            task.assignments[annotator_id].submitted = True
        else:
            raise DataError(f"unknown event kind {kind!r}")

    def compact(self) -> None:
        """Fold current state into a snapshot and truncate the log."""
        with self._lock:
            if self._log_path is None:
                return
            events = self._state_as_events()
            payload = json.dumps({"events": events}, sort_keys=True)
            tmp = self._snapshot_path.with_suffix(".tmp")
            tmp.write_text(payload, encoding="utf-8")
            tmp.replace(self._snapshot_path)
            if self._log_handle is not None:
                self._log_handle.close()
            self._log_handle = open(self._log_path, "w", encoding="utf-8")

    def _state_as_events(self) -> list[dict]:
        events: list[dict] = []
        for project_id in sorted(self._projects):
            events.append(
                {"event": "project_created", "project_id": project_id,
                 "pilot": self._projects[project_id]}
            )
        for tid in sorted(self._tasks):
            task = self._tasks[tid]
            events.append(
                {"event": "batch_created", "project_id": task.project_id,
                 "task_type": task.task_type,
                 "pairs": [[task.doc_id, task.system_id]]}
            )
            for annotator_id in sorted(task.assignments):
                assignment = task.assignments[annotator_id]
                events.append(
                    {"event": "assigned", "task_id": tid,
                     "annotator_id": annotator_id,
                     "issued_at": assignment.issued_at}
                )
            for annotator_id in sorted(task.spans):
                events.append(
                    {"event": "spans_submitted", "task_id": tid,
                     "annotator_id": annotator_id,
                     "spans": [
                         [s.label, s.char_start, s.char_end]
                         for s in task.spans[annotator_id]
                     ]}
                )
            for annotator_id in sorted(task.verdicts):
                judgment = task.verdicts[annotator_id]
                events.append(
                    {"event": "verdict_submitted", "task_id": tid,
                     "annotator_id": annotator_id,
                     "verdict": judgment.verdict, "note": judgment.evidence_note}
                )
        return events

    def close(self) -> None:
        with self._lock:
            if self._log_handle is not None:
                self._log_handle.close()
                self._log_handle = None

    # -- operations ----------------------------------------------------------

    def create_project(self, project_id: str, pilot: bool = False) -> str:
        with self._lock:
            if project_id not in self._projects:
                self._record(
                    {"event": "project_created", "project_id": project_id,
                     "pilot": pilot}
                )
            return project_id

    def create_batch(
        self, project_id: str, pairs: Iterable[tuple[str, str]], task_type: str
    ) -> list[str]:
        if task_type not in TASKS:
            raise DataError(f"unknown task type {task_type!r}")
        pair_list = [(d, s) for d, s in pairs]
        with self._lock:
            if project_id not in self._projects:
                raise ServiceError(f"unknown project {project_id!r}")
            for doc_id, system_id in pair_list:
                if (doc_id, system_id) not in self._summaries:
                    raise UnknownPair(doc_id, system_id)
                if task_type == TASK_FACTUALITY and not self._flagged_hallucinated(
                    project_id, doc_id, system_id
                ):
                    raise FilterViolation(
                        f"({doc_id!r}, {system_id!r}) is not flagged hallucinated; "
                        "factuality tasks require a completed hallucination task "
                        "with a unanimous span"
                    )
            self._record(
                {"event": "batch_created", "project_id": project_id,
                 "task_type": task_type,
                 "pairs": [[d, s] for d, s in pair_list]}
            )
            return [
                task_id_for(project_id, task_type, d, s) for d, s in pair_list
            ]

    def _flagged_hallucinated(
        self, project_id: str, doc_id: str, system_id: str
    ) -> bool:
        tid = task_id_for(project_id, TASK_HALLUCINATION, doc_id, system_id)
        task = self._tasks.get(tid)
        if task is None or task.status(self._annotators_per_task) != STATUS_DONE:
            return False
        tokens = tokenize(self._summaries[(doc_id, system_id)].text)
        unanimous = unanimous_word_labels(tokens, task.spans)
        return bool(unanimous["intrinsic"] or unanimous["extrinsic"])

    def next_task(self, annotator_id: str, task_type: str) -> TaskRecord | None:
        """Fewest-outstanding-first assignment; never reissues a seen task."""
        with self._lock:
            candidates = [
                t for t in self._tasks.values()
                if t.task_type == task_type
                and t.status(self._annotators_per_task) != STATUS_DONE
                and annotator_id not in t.assignments
                and len(t.assignments) < self._annotators_per_task
            ]
            if not candidates:
                return None
            chosen = min(candidates, key=lambda t: (t.outstanding, t.task_id))
            self._record(
                {"event": "assigned", "task_id": chosen.task_id,
                 "annotator_id": annotator_id, "issued_at": self._clock()}
            )
            return chosen

    def get_task(self, task_id: str) -> TaskRecord:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise UnknownTask(f"no task {task_id!r}")
            return task

    def submit_spans(
        self,
        task_id: str,
        annotator_id: str,
        spans: Iterable[tuple[str, int, int]],
    ) -> str:
        with self._lock:
            task = self.get_task(task_id)
            if task.task_type not in SPAN_TASK_LABELS:
                raise NotAssigned(
                    f"task {task_id!r} is a {task.task_type} task, not a span task"
                )
            self._check_submittable(task, annotator_id)
            legal = SPAN_TASK_LABELS[task.task_type]
            records = []
            for label, start, end in spans:
                if label not in legal:
                    raise IllegalLabel(label, task.task_type)
                records.append(
                    SpanAnnotation(
                        doc_id=task.doc_id, system_id=task.system_id,
                        annotator_id=annotator_id, label=label,
                        char_start=int(start), char_end=int(end),
                    )
                )
            validate_spans(records, self._summaries)
            self._record(
                {"event": "spans_submitted", "task_id": task_id,
                 "annotator_id": annotator_id,
                 "spans": [[r.label, r.char_start, r.char_end] for r in records]}
            )
            return task.status(self._annotators_per_task)

    def submit_verdict(
        self, task_id: str, annotator_id: str, verdict: bool, note: str = ""
    ) -> str:
        with self._lock:
            task = self.get_task(task_id)
            if task.task_type != TASK_FACTUALITY:
                raise NotAssigned(
                    f"task {task_id!r} is a {task.task_type} task, not factuality"
                )
            self._check_submittable(task, annotator_id)
            self._record(
                {"event": "verdict_submitted", "task_id": task_id,
                 "annotator_id": annotator_id, "verdict": bool(verdict),
                 "note": note}
            )
            return task.status(self._annotators_per_task)

    def _check_submittable(self, task: TaskRecord, annotator_id: str) -> None:
        assignment = task.assignments.get(annotator_id)
        if assignment is None:
            raise NotAssigned(
                f"annotator {annotator_id!r} is not assigned task {task.task_id!r}"
            )
        if assignment.submitted:
            raise AlreadySubmitted(
                f"annotator {annotator_id!r} already submitted task {task.task_id!r}"
            )

    # -- export ----------------------------------------------------------------

    def export(
        self, task_type: str, include_pilot: bool = False
    ) -> tuple[str, bool]:
        """Canonical TSV for one task type plus a completeness flag."""
        if task_type not in TASKS:
            raise DataError(f"unknown task type {task_type!r}")
        with self._lock:
            spans: list[SpanAnnotation] = []
            judgments: list[JudgmentRecord] = []
            participations = set()
            complete = True
            for task in self._tasks.values():
                if task.task_type != task_type:
                    continue
                if not include_pilot and self._projects.get(task.project_id, False):
                    continue
                if task.status(self._annotators_per_task) != STATUS_DONE:
                    complete = False
                for annotator_id, span_list in task.spans.items():
                    spans.extend(span_list)
                    participations.add(
                        (task.doc_id, task.system_id, annotator_id, task.task_type)
                    )
                judgments.extend(task.verdicts.values())
            annotations = AnnotationSet.build(
                spans, judgments, participations, self._annotators_per_task
            )
            return export_annotations(annotations), complete

    def task_counts(self) -> dict[str, int]:
        with self._lock:
            counts = {STATUS_OPEN: 0, STATUS_ASSIGNED: 0, STATUS_DONE: 0}
            for task in self._tasks.values():
                counts[task.status(self._annotators_per_task)] += 1
            return counts

    # -- wire helpers ------------------------------------------------------------

    def task_wire_record(self, task: TaskRecord) -> str:
        summary = self._summaries[(task.doc_id, task.system_id)]
        document = (
            self._documents.get(task.doc_id, "")
            if task.task_type in (TASK_HALLUCINATION, TASK_FACTUALITY)
            else ""
        )
        cells = (
            task.task_id, task.project_id, task.doc_id, task.system_id,
            task.task_type, task.status(self._annotators_per_task),
            summary.text, document,
        )
        return "\t".join(escape_field(c) for c in cells)


# --- HTTP layer -----------------------------------------------------------------


_ERROR_STATUS = {
    "UnknownTask": 404,
    "UnknownPair": 404,
    "FilterViolation": 422,
    "NotAssigned": 403,
    "AlreadySubmitted": 409,
}


class _ServiceHandler(BaseHTTPRequestHandler):
    server_version = "faitheval-annotation"

    # -- helpers ------------------------------------------------------------

    def _send_text(self, status: int, body: str, headers: Mapping[str, str] = ()):
        payload = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/tab-separated-values; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        for key, value in dict(headers).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(payload)

    def _send_error_record(self, exc: Exception):
        if isinstance(exc, ServiceError):
            status = _ERROR_STATUS.get(type(exc).__name__, 400)
        elif isinstance(exc, DataError):
            status = 400
        else:
            raise exc
        body = "\t".join(
            ("error", type(exc).__name__, escape_field(str(exc)))
        )
        self._send_text(status, body + "\n")

    def _body(self) -> str:
        length = int(self.headers.get("Content-Length", "0"))
        return self.rfile.read(length).decode("utf-8")

    def log_message(self, *_args):
        pass

    # -- routing ---------------------------------------------------------------

    def do_POST(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        store: AnnotationStore = self.server.store
        try:
            if parts == ["projects"]:
                cells = self._body().strip().split("\t")
                project_id = unescape_field(cells[0])
                pilot = len(cells) > 1 and cells[1] == "1"
                store.create_project(project_id, pilot)
                self._send_text(200, project_id + "\n")
            elif len(parts) == 3 and parts[0] == "projects" and parts[2] == "batches":
                task_type = query.get("type", "")
                pairs = []
                for line in self._body().splitlines():
                    if not line:
                        continue
                    cells = line.split("\t")
                    if len(cells) != 2:
                        raise DataError(f"batch line needs doc_id\\tsystem_id: {line!r}")
                    pairs.append(
                        (unescape_field(cells[0]), unescape_field(cells[1]))
                    )
                ids = store.create_batch(unescape_field(parts[1]), pairs, task_type)
                self._send_text(200, "".join(i + "\n" for i in ids))
            elif len(parts) == 3 and parts[0] == "tasks" and parts[2] == "spans":
                annotator = query.get("annotator", "")
                spans = []
                for line in self._body().splitlines():
                    if not line:
                        continue
                    cells = line.split("\t")
                    if len(cells) != 3:
                        raise DataError(
                            f"span line needs label\\tstart\\tend: {line!r}"
                        )
                    try:
                        spans.append(
                            (unescape_field(cells[0]), int(cells[1]), int(cells[2]))
                        )
                    except ValueError as exc:
                        raise DataError(f"bad span offsets: {line!r}") from exc
                status = store.submit_spans(parts[1], annotator, spans)
                self._send_text(200, f"{parts[1]}\t{status}\n")
            elif len(parts) == 3 and parts[0] == "tasks" and parts[2] == "verdict":
                annotator = query.get("annotator", "")
                cells = self._body().strip("\n").split("\t")
                if not cells or cells[0] not in ("true", "false"):
                    raise DataError("verdict body needs true|false\\t[note]")
                note = unescape_field(cells[1]) if len(cells) > 1 else ""
                status = store.submit_verdict(
                    parts[1], annotator, cells[0] == "true", note
                )
                self._send_text(200, f"{parts[1]}\t{status}\n")
            else:
                self._send_text(404, "error\tNotFound\tno such route\n")
        except FaithEvalError as exc:
            self._send_error_record(exc)

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        store: AnnotationStore = self.server.store
        try:
            if parts == ["tasks", "next"]:
                annotator = query.get("annotator", "")
                task_type = query.get("type", "")
                if not annotator or task_type not in TASKS:
                    raise DataError("need annotator= and type= query parameters")
                task = store.next_task(annotator, task_type)
                if task is None:
                    self._send_text(204, "")
                else:
                    self._send_text(200, store.task_wire_record(task) + "\n")
            elif parts == ["export"]:
                task_type = query.get("type", "")
                include_pilot = query.get("pilot", "") == "1"
                body, complete = store.export(task_type, include_pilot)
                self._send_text(
                    200, body,
                    headers={"X-Export-Complete": "true" if complete else "false"},
                )
            elif not parts or parts[0] == "static":
                self._serve_static(parts)
            else:
                self._send_text(404, "error\tNotFound\tno such route\n")
        except FaithEvalError as exc:
            self._send_error_record(exc)

    def _serve_static(self, parts: list[str]) -> None:
        static_dir: Path | None = self.server.static_dir
        if static_dir is None:
            self._send_text(404, "error\tNotFound\tno UI bundle configured\n")
            return
        rel = "/".join(parts[1:]) if parts and parts[0] == "static" else "index.html"
        rel = rel or "index.html"
        target = (static_dir / rel).resolve()
        if not target.is_relative_to(static_dir.resolve()) or not target.is_file():
            self._send_text(404, "error\tNotFound\tno such file\n")
            return
        payload = target.read_bytes()
        content_type = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
        }.get(target.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class AnnotationService:
    """ThreadingHTTPServer wrapper around an AnnotationStore."""

    def __init__(
        self,
        store: AnnotationStore,
        port: int = 0,
        static_dir: str | Path | None = None,
        host: str = "127.0.0.1",
    ):
        self.store = store
        self.server = ThreadingHTTPServer((host, port), _ServiceHandler)
        self.server.store = store
        self.server.static_dir = Path(static_dir) if static_dir else None
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.server.server_address[0]}:{self.port}"

    def start(self) -> "AnnotationService":
        self._thread = threading.Thread(
            target=self.server.serve_forever, daemon=True
        )
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self.server.serve_forever()

    def join(self) -> None:
        """Block until the serving thread exits (stop() from elsewhere)."""
        if self._thread is not None:
            self._thread.join()

    def stop(self) -> None:
        self.server.shutdown()
        if self._thread is not None:
            self._thread.join()
        self.server.server_close()
        self.store.close()
