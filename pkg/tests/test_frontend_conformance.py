"""Cross-language conformance between the browser UI and the Python core.

Two contracts keep the two implementations honest:

* the shared tokenization fixture pins word boundaries for both sides, and
* every span list the fuzzed UI model produces must be accepted verbatim by
  a real annotation store (assignment, validation and all).

The frozen fuzz file is written by the frontend test suite
(``UPDATE_FIXTURES=1 npx vitest run test/fuzz.test.ts``); this module only
reads it.
"""

import json
from pathlib import Path

import pytest

from faitheval import corpus
from faitheval.service import AnnotationStore

HERE = Path(__file__).parent
TOKENIZATION_TSV = HERE / "fixtures" / "data" / "tokenization.tsv"
FUZZ_JSON = HERE.parent / "frontend" / "test" / "fixtures" / "fuzz_submissions.json"


def _unescape(cell: str) -> str:
    out, i = [], 0
    while i < len(cell):
        if cell[i] == "\\" and i + 1 < len(cell) and cell[i + 1] in ("\\", "t"):
            out.append("\t" if cell[i + 1] == "t" else "\\")
            i += 2
        else:
            out.append(cell[i])
            i += 1
    return "".join(out)


def test_core_tokenizer_matches_shared_fixture():
    lines = TOKENIZATION_TSV.read_text(encoding="utf-8").splitlines()
    assert len(lines) >= 21
    for line in lines[1:]:
        encoded_text, cells = line.split("\t", 1)
        text = _unescape(encoded_text)
        want = []
        for cell in cells.split(";"):
            start, end, surface = cell.split(":", 2)
            want.append((int(start), int(end), surface))
        got = [(t.char_start, t.char_end, t.surface) for t in corpus.tokenize(text)]
        assert got == want, f"tokenizer drift on {text!r}"


@pytest.fixture(scope="module")
def fuzz_payload():
    if not FUZZ_JSON.exists():
        pytest.skip("frontend fuzz fixture not generated")
    return json.loads(FUZZ_JSON.read_text(encoding="utf-8"))


def test_fuzzed_ui_submissions_are_all_accepted(fuzz_payload):
    cases = fuzz_payload["cases"]
    assert len(cases) == 1000

    summaries = [
        corpus.SummaryRecord(doc_id=f"f{i:04d}", system_id="ui", text=case["text"])
        for i, case in enumerate(cases)
    ]
    store = AnnotationStore(summaries)
    store.create_project("fuzz")

    by_task_id = {}
    for i, case in enumerate(cases):
        (task_id,) = store.create_batch(
            "fuzz", [(f"f{i:04d}", "ui")], case["task_type"]
        )
        by_task_id[task_id] = case

    accepted = 0
    for task_type in (corpus.TASK_HALLUCINATION, corpus.TASK_LINGUISTIC):
        while True:
            task = store.next_task("ui-rater", task_type)
            if task is None:
                break
            case = by_task_id[task.task_id]
            spans = [(label, start, end) for label, start, end in case["spans"]]
            store.submit_spans(task.task_id, "ui-rater", spans)
            accepted += 1
    assert accepted == 1000


def test_fuzzed_spans_snap_to_core_word_boundaries(fuzz_payload):
    # the UI promises word-snapped spans; verify against the core tokenizer
    for case in fuzz_payload["cases"]:
        tokens = corpus.tokenize(case["text"])
        starts = {t.char_start for t in tokens}
        ends = {t.char_end for t in tokens}
        prev_end = -1
        for label, start, end in case["spans"]:
            assert start in starts and end in ends, (case["text"], start, end)
            assert start >= prev_end
            prev_end = end
            assert label in corpus.SPAN_TASK_LABELS[case["task_type"]]
