"""Score-file parsing, probability normalization bands, wire client behavior.

The HTTP tests run against an in-process threading server bound to port 0;
no network access is needed.
"""

import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from faitheval.errors import (
    ConfigError,
    DuplicateKey,
    EndpointUnavailable,
    InvalidResponse,
    MissingScore,
    ProbabilityNotNormalized,
    SchemaError,
)
from faitheval.gateway import (
    CacheStats,
    EntailmentScore,
    FileScorer,
    QaPair,
    RcAnswer,
    ScorerGateway,
    format_record,
    load_scores,
    parse_record,
    write_scores,
)


# --- score files ---------------------------------------------------------------


def test_entailment_file_round_trip(tmp_path):
    records = [
        EntailmentScore.build("d1", "sysA", 0.5, 0.3, 0.2),
        EntailmentScore.build("d2", "sysA", 0.1, 0.1, 0.8),
    ]
    path = tmp_path / "entailment_scores.tsv"
    write_scores(path, "entailment", records)
    loaded = load_scores(path, "entailment")
    assert loaded == {r.key: r for r in records}


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "scores.tsv"
    path.write_text("d1\tsysA\t0.5\t0.3\t0.2\n", encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_scores(path, "entailment")
    assert err.value.line_no == 1


def test_duplicate_key_rejected(tmp_path):
    path = tmp_path / "scores.tsv"
    path.write_text(
        "doc_id\tsystem_id\tp_entail\tp_neutral\tp_contradict\n"
        "d1\tsysA\t0.5\t0.3\t0.2\n"
        "d1\tsysA\t0.2\t0.3\t0.5\n",
        encoding="utf-8",
    )
    with pytest.raises(DuplicateKey):
        load_scores(path, "entailment")


def test_probability_bands():
    # within 1e-6 of 1: accepted verbatim
    r = EntailmentScore.build("d", "s", 0.5, 0.3, 0.2 + 5e-7)
    assert r.probs == (0.5, 0.3, 0.2 + 5e-7)
    # within 1e-3: renormalized to an exact simplex
    r = EntailmentScore.build("d", "s", 0.5004, 0.3, 0.2)
    assert sum(r.probs) == pytest.approx(1.0, abs=1e-12)
    assert r.p_entail == pytest.approx(0.5004 / 1.0004)
    # beyond 1e-3: error
    with pytest.raises(ProbabilityNotNormalized):
        EntailmentScore.build("d", "s", 0.9, 0.9, 0.9)
    # out-of-range components are never renormalized away
    with pytest.raises(ProbabilityNotNormalized):
        EntailmentScore.build("d", "s", -0.1, 0.6, 0.5)
    with pytest.raises(ProbabilityNotNormalized):
        EntailmentScore.build("d", "s", 1.2, 0.0, -0.2)


def test_record_escaping_round_trip():
    pair = QaPair("d1", "sysA", 0, "what\thappened?\n", "a\\b")
    line = format_record(pair)
    assert "\n" not in line and line.count("\t") == 4
    assert parse_record("qa_pairs", line) == pair


def test_qa_pair_requires_question_and_answer():
    with pytest.raises(SchemaError):
        parse_record("qa_pairs", "d1\tsysA\t0\t\tanswer")
    # empty rc answer is legal: it means "no answer found"
    rc = parse_record("rc_answers", "d1\tsysA\t0\t")
    assert rc == RcAnswer("d1", "sysA", 0, "")


def test_bad_numeric_cells():
    with pytest.raises(SchemaError):
        parse_record("entailment", "d1\tsysA\thigh\t0.3\t0.2")
    with pytest.raises(SchemaError):
        parse_record("qa_pairs", "d1\tsysA\tfirst\tq\ta")
    with pytest.raises(SchemaError):
        parse_record("similarity", "d1\tsysA\tnan")


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_scores(tmp_path / "x.tsv", "sentiment")


# --- file scorer -----------------------------------------------------------------


def make_tables():
    entail = {
        ("d1", "sysA"): EntailmentScore.build("d1", "sysA", 0.7, 0.2, 0.1),
        ("d2", "sysA"): EntailmentScore.build("d2", "sysA", 0.2, 0.3, 0.5),
    }
    qa = {
        ("d1", "sysA", 0): QaPair("d1", "sysA", 0, "who won?", "city"),
        ("d1", "sysA", 1): QaPair("d1", "sysA", 1, "when?", "tuesday"),
    }
    rc = {
        ("d1", "sysA", 0): RcAnswer("d1", "sysA", 0, "city"),
        ("d1", "sysA", 1): RcAnswer("d1", "sysA", 1, ""),
    }
    return entail, qa, rc


def test_file_scorer_lookups():
    entail, qa, rc = make_tables()
    scorer = FileScorer(entailment=entail, qa_pairs=qa, rc_answers=rc)
    got = scorer.request("entailment", {"doc_id": "d1", "system_id": "sysA",
                                        "document": "x", "summary": "y"})
    assert got == entail[("d1", "sysA")]
    pairs = scorer.request("qg", {"doc_id": "d1", "system_id": "sysA", "summary": "y"})
    assert [p.q_index for p in pairs] == [0, 1]
    answer = scorer.request("rc", {"doc_id": "d1", "system_id": "sysA",
                                   "q_index": 1, "question": "when?", "context": "x"})
    assert answer.rc_answer == ""
    with pytest.raises(MissingScore):
        scorer.request("entailment", {"doc_id": "zz", "system_id": "sysA",
                                      "document": "x", "summary": "y"})


# --- wire protocol ------------------------------------------------------------------


class ScorerHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        server = self.server
        with server.state_lock:
            server.request_count += 1
            server.in_flight += 1
            server.max_in_flight = max(server.max_in_flight, server.in_flight)
            server.last_auth = self.headers.get("Authorization")
            fail_with = server.fail_queue.pop(0) if server.fail_queue else None
        try:
            if server.hold_seconds:
                time.sleep(server.hold_seconds)
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length).decode("utf-8")
            if fail_with is not None:
                self.send_response(fail_with)
                self.end_headers()
                return
            reply = server.respond(self.path, body)
            payload = reply.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/tab-separated-values")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
        finally:
            with server.state_lock:
                server.in_flight -= 1

    def log_message(self, *_args):
        pass


@pytest.fixture
def scorer_server():
    entail, qa, rc = make_tables()

    def respond(path, body):
        cells = body.split("\t")
        doc_id, system_id = cells[0], cells[1]
        if path == "/score/entailment":
            return format_record(entail[(doc_id, system_id)])
        if path == "/score/qg":
            pairs = [p for p in qa.values() if (p.doc_id, p.system_id) == (doc_id, system_id)]
            return "\n".join(format_record(p) for p in sorted(pairs, key=lambda p: p.q_index))
        if path == "/score/rc":
            return format_record(rc[(doc_id, system_id, int(cells[2]))])
        raise AssertionError(f"unexpected path {path}")

    server = ThreadingHTTPServer(("127.0.0.1", 0), ScorerHandler)
    server.state_lock = threading.Lock()
    server.request_count = 0
    server.in_flight = 0
    server.max_in_flight = 0
    server.hold_seconds = 0.0
    server.fail_queue = []
    server.last_auth = None
    server.respond = respond
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        thread.join()
        server.server_close()


def gateway_for(server, **kwargs):
    base = f"http://127.0.0.1:{server.server_address[1]}"
    endpoints = {
        "entailment": f"{base}/score/entailment",
        "qg": f"{base}/score/qg",
        "rc": f"{base}/score/rc",
    }
    kwargs.setdefault("backoff", 0.0)
    return ScorerGateway(endpoints=endpoints, **kwargs)


ENTAIL_PAYLOAD = {"doc_id": "d1", "system_id": "sysA", "document": "x", "summary": "y"}


def test_wire_entailment_and_cache(scorer_server):
    gw = gateway_for(scorer_server)
    assert gw.cache_stats() == (0, 0, 0)
    first = gw.request("entailment", ENTAIL_PAYLOAD)
    assert first == EntailmentScore.build("d1", "sysA", 0.7, 0.2, 0.1)
    second = gw.request("entailment", ENTAIL_PAYLOAD)
    assert second == first
    assert scorer_server.request_count == 1  # one upstream call, one cache hit
    assert gw.cache_stats() == (1, 1, 1)
    gw.clear_cache()
    assert gw.cache_stats().entries == 0


def test_wire_qg_fans_out(scorer_server):
    gw = gateway_for(scorer_server)
    pairs = gw.request("qg", {"doc_id": "d1", "system_id": "sysA", "summary": "y"})
    assert [p.q_index for p in pairs] == [0, 1]
    assert all(isinstance(p, QaPair) for p in pairs)


def test_transient_failures_are_retried(scorer_server):
    scorer_server.fail_queue = [500, 503]
    gw = gateway_for(scorer_server, retries=2)
    got = gw.request("entailment", ENTAIL_PAYLOAD)
    assert got.p_entail == pytest.approx(0.7)
    assert scorer_server.request_count == 3


def test_exhausted_retries_raise(scorer_server):
    scorer_server.fail_queue = [500, 500, 500]
    gw = gateway_for(scorer_server, retries=2)
    with pytest.raises(EndpointUnavailable):
        gw.request("entailment", ENTAIL_PAYLOAD)
    assert scorer_server.request_count == 3


def test_client_errors_do_not_retry(scorer_server):
    scorer_server.fail_queue = [404]
    gw = gateway_for(scorer_server, retries=3)
    with pytest.raises(InvalidResponse):
        gw.request("entailment", ENTAIL_PAYLOAD)
    assert scorer_server.request_count == 1


def test_connection_refused_is_unavailable():
    gw = ScorerGateway(
        endpoints={"entailment": "http://127.0.0.1:9/score/entailment"},
        retries=1, backoff=0.0, timeout=0.5,
    )
    with pytest.raises(EndpointUnavailable):
        gw.request("entailment", ENTAIL_PAYLOAD)


def test_mismatched_response_rejected(scorer_server):
    other = format_record(EntailmentScore.build("other", "sysA", 0.7, 0.2, 0.1))
    scorer_server.respond = lambda path, body: other
    gw = gateway_for(scorer_server)
    with pytest.raises(InvalidResponse):
        gw.request("entailment", ENTAIL_PAYLOAD)


def test_malformed_response_rejected(scorer_server):
    scorer_server.respond = lambda path, body: "not\ta\tvalid\trecord"
    gw = gateway_for(scorer_server)
    with pytest.raises(InvalidResponse):
        gw.request("entailment", ENTAIL_PAYLOAD)


def test_missing_endpoint_is_config_error():
    gw = ScorerGateway(endpoints={})
    with pytest.raises(ConfigError):
        gw.request("rc", {"doc_id": "d", "system_id": "s", "q_index": 0,
                          "question": "q", "context": "c"})
    with pytest.raises(ConfigError):
        gw.request("weather", {"doc_id": "d", "system_id": "s"})


def test_bearer_token_forwarded(scorer_server):
    gw = gateway_for(scorer_server, bearer_token="sesame")
    gw.request("entailment", ENTAIL_PAYLOAD)
    assert scorer_server.last_auth == "Bearer sesame"


def test_request_many_order_and_bounded_parallelism(scorer_server):
    scorer_server.hold_seconds = 0.05
    gw = gateway_for(scorer_server, parallelism=3)
    payloads = [
        {"doc_id": doc, "system_id": "sysA", "document": "x", "summary": "y"}
        for doc in ("d1", "d2", "d1", "d2", "d1", "d2")
    ]
    results = gw.request_many("entailment", payloads)
    assert [r.doc_id for r in results] == ["d1", "d2", "d1", "d2", "d1", "d2"]
    assert scorer_server.max_in_flight <= 3
    # concurrent duplicates share the fetcher's call: two upstream requests
    assert scorer_server.request_count == 2
    assert gw.cache_stats() == CacheStats(hits=4, misses=2, entries=2)


def test_source_transparency(scorer_server):
    # the same logical scores through files and through the wire must agree
    entail, qa, rc = make_tables()
    file_scorer = FileScorer(entailment=entail, qa_pairs=qa, rc_answers=rc)
    gw = gateway_for(scorer_server)
    payloads = [
        ("entailment", ENTAIL_PAYLOAD),
        ("entailment", {"doc_id": "d2", "system_id": "sysA", "document": "x", "summary": "y"}),
        ("qg", {"doc_id": "d1", "system_id": "sysA", "summary": "y"}),
        ("rc", {"doc_id": "d1", "system_id": "sysA", "q_index": 0,
                "question": "who won?", "context": "x"}),
        ("rc", {"doc_id": "d1", "system_id": "sysA", "q_index": 1,
                "question": "when?", "context": "x"}),
    ]
    for kind, payload in payloads:
        assert file_scorer.request(kind, payload) == gw.request(kind, payload)
