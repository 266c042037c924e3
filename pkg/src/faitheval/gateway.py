"""Uniform access to external scorers via score files or a small wire protocol.

Neural models never run in-process: scores arrive either from TSV files or
from HTTP endpoints whose request/response bodies are single-line TSV records
with the same schemas as the files. Responses are validated before anything
downstream sees them, and a digest-keyed cache memoizes wire calls.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import requests

from .corpus import escape_field, unescape_field
from .errors import (
    ConfigError,
    DuplicateKey,
    EndpointUnavailable,
    InvalidResponse,
    MissingScore,
    ProbabilityNotNormalized,
    SchemaError,
)

SCORE_SCHEMAS = {
    "entailment": ("doc_id", "system_id", "p_entail", "p_neutral", "p_contradict"),
    "similarity": ("doc_id", "system_id", "value"),
    "qa_pairs": ("doc_id", "system_id", "q_index", "question", "answer"),
    "rc_answers": ("doc_id", "system_id", "q_index", "rc_answer"),
}

REQUEST_SCHEMAS = {
    "entailment": ("doc_id", "system_id", "document", "summary"),
    "qg": ("doc_id", "system_id", "summary"),
    "rc": ("doc_id", "system_id", "q_index", "question", "context"),
}

# a qg request fans out into several qa_pairs records; the others are 1:1
RESPONSE_KIND = {"entailment": "entailment", "qg": "qa_pairs", "rc": "rc_answers"}

ENDPOINT_ENV = {
    "entailment": "FAITHEVAL_ENTAIL_URL",
    "qg": "FAITHEVAL_QG_URL",
    "rc": "FAITHEVAL_RC_URL",
    "similarity": "FAITHEVAL_SIM_URL",
}
TOKEN_ENV = "FAITHEVAL_SCORER_TOKEN"

ACCEPT_TOL = 1e-6   # sums this close to 1 pass through untouched
RENORM_TOL = 1e-3   # sums this close are rescaled; anything worse is an error


@dataclass(frozen=True)
class EntailmentScore:
    doc_id: str
    system_id: str
    p_entail: float
    p_neutral: float
    p_contradict: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.doc_id, self.system_id)

    @property
    def probs(self) -> tuple[float, float, float]:
        return (self.p_entail, self.p_neutral, self.p_contradict)

    @staticmethod
    def build(
        doc_id: str, system_id: str, p_entail: float, p_neutral: float,
        p_contradict: float,
    ) -> "EntailmentScore":
        key = (doc_id, system_id)
        probs = (p_entail, p_neutral, p_contradict)
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise ProbabilityNotNormalized(key, sum(probs))
        total = sum(probs)
        if abs(total - 1.0) > ACCEPT_TOL:
            if abs(total - 1.0) > RENORM_TOL:
                raise ProbabilityNotNormalized(key, total)
            probs = tuple(p / total for p in probs)
        return EntailmentScore(doc_id, system_id, *probs)


@dataclass(frozen=True)
class SimilarityScore:
    doc_id: str
    system_id: str
    value: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.doc_id, self.system_id)


@dataclass(frozen=True)
class QaPair:
    doc_id: str
    system_id: str
    q_index: int
    question: str
    answer: str

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.doc_id, self.system_id, self.q_index)


@dataclass(frozen=True)
class RcAnswer:
    doc_id: str
    system_id: str
    q_index: int
    rc_answer: str  # empty string means "no answer found"

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.doc_id, self.system_id, self.q_index)


class CacheStats(NamedTuple):
    hits: int
    misses: int
    entries: int


def parse_record(kind: str, line: str, line_no: int = 0):
    schema = SCORE_SCHEMAS[kind]
    cells = line.split("\t")
    if len(cells) != len(schema):
        raise SchemaError(
            line_no, f"expected {len(schema)} {kind} columns, got {len(cells)}"
        )
    row = dict(zip(schema, (unescape_field(c) for c in cells)))
    for field in ("doc_id", "system_id"):
        if row[field] == "":
            raise SchemaError(line_no, f"empty {field}")
    try:
        if kind == "entailment":
            return EntailmentScore.build(
                row["doc_id"], row["system_id"],
                float(row["p_entail"]), float(row["p_neutral"]),
                float(row["p_contradict"]),
            )
        if kind == "similarity":
            value = float(row["value"])
            if value != value or value in (float("inf"), float("-inf")):
                raise SchemaError(line_no, "non-finite similarity value")
            return SimilarityScore(row["doc_id"], row["system_id"], value)
        if kind == "qa_pairs":
            if row["question"] == "" or row["answer"] == "":
                raise SchemaError(line_no, "empty question or answer")
            return QaPair(
                row["doc_id"], row["system_id"], int(row["q_index"]),
                row["question"], row["answer"],
            )
        if kind == "rc_answers":
            return RcAnswer(
                row["doc_id"], row["system_id"], int(row["q_index"]),
                row["rc_answer"],
            )
    except ValueError as exc:
        raise SchemaError(line_no, f"bad numeric cell: {exc}") from exc
    raise SchemaError(line_no, f"unknown score kind {kind!r}")


def format_record(record) -> str:
    if isinstance(record, EntailmentScore):
        cells = (
            record.doc_id, record.system_id,
            repr(record.p_entail), repr(record.p_neutral), repr(record.p_contradict),
        )
    elif isinstance(record, SimilarityScore):
        cells = (record.doc_id, record.system_id, repr(record.value))
    elif isinstance(record, QaPair):
        cells = (
            record.doc_id, record.system_id, str(record.q_index),
            record.question, record.answer,
        )
    elif isinstance(record, RcAnswer):
        cells = (
            record.doc_id, record.system_id, str(record.q_index), record.rc_answer,
        )
    else:
        raise TypeError(f"not a score record: {record!r}")
    return "\t".join(escape_field(c) for c in cells)


def load_scores(path: str | Path, kind: str) -> dict:
    """Read one score file; records keyed by their natural key, duplicates fatal."""
    if kind not in SCORE_SCHEMAS:
        raise ConfigError(f"unknown score kind {kind!r}")
    schema = SCORE_SCHEMAS[kind]
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != list(schema):
        raise SchemaError(1, f"missing {kind} header {chr(9).join(schema)!r}")
    out: dict = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        record = parse_record(kind, line, line_no)
        if record.key in out:
            raise DuplicateKey(record.key)
        out[record.key] = record
    return out


def write_scores(path: str | Path, kind: str, records) -> None:
    lines = ["\t".join(SCORE_SCHEMAS[kind])]
    lines += [format_record(r) for r in sorted(records, key=lambda r: r.key)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class FileScorer:
    """Scorer backed entirely by preloaded score files.

    Answers the same request kinds as the wire gateway so downstream code is
    indifferent to the score source.
    """

    def __init__(
        self,
        entailment: Mapping | None = None,
        qa_pairs: Mapping | None = None,
        rc_answers: Mapping | None = None,
        similarity: Mapping | None = None,
    ):
        self._tables = {
            "entailment": dict(entailment or {}),
            "qa_pairs": dict(qa_pairs or {}),
            "rc_answers": dict(rc_answers or {}),
            "similarity": dict(similarity or {}),
        }

    def request(self, kind: str, payload: Mapping[str, str]):
        doc_id = payload["doc_id"]
        system_id = payload["system_id"]
        if kind == "entailment":
            try:
                return self._tables["entailment"][(doc_id, system_id)]
            except KeyError:
                raise MissingScore(doc_id, system_id) from None
        if kind == "qg":
            pairs = [
                r for r in self._tables["qa_pairs"].values()
                if r.doc_id == doc_id and r.system_id == system_id
            ]
            return sorted(pairs, key=lambda r: r.q_index)
        if kind == "rc":
            key = (doc_id, system_id, int(payload["q_index"]))
            try:
                return self._tables["rc_answers"][key]
            except KeyError:
                raise MissingScore(doc_id, system_id) from None
        if kind == "similarity":
            try:
                return self._tables["similarity"][(doc_id, system_id)]
            except KeyError:
                raise MissingScore(doc_id, system_id) from None
        raise ConfigError(f"unknown request kind {kind!r}")

    def request_many(self, kind: str, payloads: Sequence[Mapping[str, str]]):
        return [self.request(kind, p) for p in payloads]


class ScorerGateway:
    """HTTP scorer client: bounded retries, digest cache, bounded parallelism."""

    def __init__(
        self,
        endpoints: Mapping[str, str] | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.5,
        parallelism: int = 8,
        bearer_token: str | None = None,
        session: requests.Session | None = None,
    ):
        env_endpoints = {
            kind: os.environ[var]
            for kind, var in ENDPOINT_ENV.items()
            if var in os.environ
        }
        self.endpoints = {**env_endpoints, **(endpoints or {})}
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.parallelism = parallelism
        self.bearer_token = bearer_token or os.environ.get(TOKEN_ENV)
        self._session = session or requests.Session()
        self._cache: dict[str, object] = {}
        self._in_flight: dict[str, threading.Event] = {}
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0

    # -- cache -------------------------------------------------------------

    def cache_stats(self) -> CacheStats:
        with self._lock:
            return CacheStats(self._hits, self._misses, len(self._cache))

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    # -- requests ------------------------------------------------------------

    def request(self, kind: str, payload: Mapping[str, str]):
        if kind not in REQUEST_SCHEMAS:
            raise ConfigError(f"unknown request kind {kind!r}")
        url = self.endpoints.get(kind)
        if not url:
            raise ConfigError(
                f"no endpoint for {kind!r}; set {ENDPOINT_ENV.get(kind, '?')}"
            )
        body = self._request_body(kind, payload)
        digest = hashlib.sha256(f"{kind}\n{body}".encode("utf-8")).hexdigest()
        # concurrent identical requests share one upstream call: the first
        # becomes the fetcher, the rest wait on its event and read the cache
        while True:
            with self._lock:
                if digest in self._cache:
                    self._hits += 1
                    return self._cache[digest]
                waiter = self._in_flight.get(digest)
                if waiter is None:
                    self._in_flight[digest] = threading.Event()
                    self._misses += 1
                    break
            waiter.wait()
        try:
            result = self._fetch(kind, url, body, payload)
        except BaseException:
            with self._lock:
                self._in_flight.pop(digest).set()
            raise
        with self._lock:
            self._cache[digest] = result
            self._in_flight.pop(digest).set()
        return result

    def request_many(self, kind: str, payloads: Sequence[Mapping[str, str]]):
        """All responses, in payload order, with bounded in-flight requests."""
        if not payloads:
            return []
        workers = max(1, min(self.parallelism, len(payloads)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda p: self.request(kind, p), payloads))

    # -- internals ---------------------------------------------------------------

    def _request_body(self, kind: str, payload: Mapping[str, str]) -> str:
        missing = [f for f in REQUEST_SCHEMAS[kind] if f not in payload]
        if missing:
            raise ConfigError(f"{kind} payload missing fields {missing}")
        return "\t".join(
            escape_field(str(payload[f])) for f in REQUEST_SCHEMAS[kind]
        )

    def _fetch(self, kind: str, url: str, body: str, payload: Mapping[str, str]):
        headers = {"Content-Type": "text/tab-separated-values; charset=utf-8"}
        if self.bearer_token:
            headers["Authorization"] = f"Bearer {self.bearer_token}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.post(
                    url, data=body.encode("utf-8"), headers=headers,
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if 500 <= response.status_code < 600:
                last_error = EndpointUnavailable(
                    f"{url} returned {response.status_code}"
                )
                continue
            if response.status_code != 200:
                raise InvalidResponse(
                    f"{url} returned {response.status_code}: {response.text[:200]}"
                )
            return self._parse_response(kind, response.text, payload)
        raise EndpointUnavailable(
            f"{url} unavailable after {self.retries + 1} attempts: {last_error}"
        )

    def _parse_response(self, kind: str, text: str, payload: Mapping[str, str]):
        response_kind = RESPONSE_KIND[kind]
        lines = [l for l in text.splitlines() if l != ""]
        try:
            records = [
                parse_record(response_kind, line, line_no)
                for line_no, line in enumerate(lines, start=1)
            ]
        except (SchemaError, ProbabilityNotNormalized) as exc:
            raise InvalidResponse(f"malformed {response_kind} response: {exc}") from exc
        for record in records:
            if (record.doc_id, record.system_id) != (
                payload["doc_id"], payload["system_id"],
            ):
                raise InvalidResponse(
                    f"response for {record.doc_id}/{record.system_id} does not "
                    f"match request {payload['doc_id']}/{payload['system_id']}"
                )
        if kind == "qg":
            return sorted(records, key=lambda r: r.q_index)
        if len(records) != 1:
            raise InvalidResponse(
                f"expected exactly one {response_kind} record, got {len(records)}"
            )
        return records[0]


def gateway_from_env(**overrides) -> ScorerGateway:
    return ScorerGateway(**overrides)
