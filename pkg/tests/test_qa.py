"""Answer normalization, match rules, and the QA round-trip over file scorers."""

import pytest
from hypothesis import given, strategies as st

from faitheval.corpus import DocumentRecord, SummaryRecord
from faitheval.errors import MissingDocument, NoQuestions
from faitheval.gateway import FileScorer, QaPair, RcAnswer
from faitheval.qa import (
    QaVerdict,
    answers_match,
    normalize_answer,
    qa_accuracy,
    run_roundtrip,
    token_f1,
)


# --- normalization -----------------------------------------------------------


def test_normalize_examples():
    assert normalize_answer("The Eiffel Tower!") == "eiffel tower"
    assert normalize_answer("") == ""
    assert normalize_answer("Huddersfield   town") == "huddersfield town"
    assert normalize_answer("A man and an idea") == "man and idea"
    assert normalize_answer("the") == ""
    assert normalize_answer("“Quoted” words…") == "quoted words"
    assert normalize_answer("  spaced  out  ") == "spaced out"


def test_punctuation_removal_can_expose_articles():
    # "a-n" collapses to the article "an", which the same pass removes
    assert normalize_answer("a-n idea") == "idea"
    assert normalize_answer("t.h.e end") == "end"


@given(st.text(max_size=80))
def test_normalize_idempotent(s):
    once = normalize_answer(s)
    assert normalize_answer(once) == once


@given(st.text(max_size=80))
def test_normalize_output_shape(s):
    out = normalize_answer(s)
    assert out == out.strip()
    assert "  " not in out
    words = out.split(" ") if out else []
    assert all(w not in ("a", "an", "the") for w in words)


# --- matching ----------------------------------------------------------------


def test_match_is_normalized_equality():
    assert answers_match("coal", "Coal.")
    assert answers_match("the Eiffel tower", "Eiffel Tower!")
    assert not answers_match("huddersfield town", "huddersfield city")


def test_empty_rc_answer_never_matches():
    assert not answers_match("huddersfield town", "")
    assert not answers_match("the", "")  # even when the expected normalizes empty


def test_token_f1_mode():
    # overlap 2 of 2 predicted, 2 of 3 expected: F1 = 0.8
    assert token_f1("huddersfield town fc", "huddersfield town") == pytest.approx(0.8)
    assert not answers_match("huddersfield town fc", "huddersfield town")
    assert answers_match(
        "huddersfield town fc", "huddersfield town", mode="token_f1"
    )
    assert not answers_match(
        "huddersfield town fc", "huddersfield town", mode="token_f1", f1_threshold=0.9
    )
    with pytest.raises(ValueError):
        answers_match("x", "y", mode="fuzzy")


@given(st.text(max_size=40), st.text(max_size=40))
def test_token_f1_bounds_and_reflexivity(a, b):
    assert 0.0 <= token_f1(a, b) <= 1.0
    assert token_f1(a, a) == pytest.approx(1.0)
    assert token_f1(a, b) == pytest.approx(token_f1(b, a))


# --- round trip -----------------------------------------------------------------


def roundtrip_fixture():
    documents = [
        DocumentRecord("d1", "the match was won by city on tuesday at home"),
        DocumentRecord("d2", "a storm closed schools across the county"),
    ]
    summaries = [
        SummaryRecord("d1", "sysA", "city won the match on tuesday"),
        SummaryRecord("d2", "sysA", "schools were closed by a storm"),
        SummaryRecord("d1", "sysB", "united won the match"),
    ]
    qa_pairs = {
        ("d1", "sysA", 0): QaPair("d1", "sysA", 0, "who won the match?", "city"),
        ("d1", "sysA", 1): QaPair("d1", "sysA", 1, "when was the match?", "tuesday"),
        ("d2", "sysA", 0): QaPair("d2", "sysA", 0, "what closed schools?", "a storm"),
        ("d1", "sysB", 0): QaPair("d1", "sysB", 0, "who won the match?", "united"),
        ("d1", "sysB", 1): QaPair("d1", "sysB", 1, "what was won?", "the match"),
    }
    rc_answers = {
        ("d1", "sysA", 0): RcAnswer("d1", "sysA", 0, "City"),
        ("d1", "sysA", 1): RcAnswer("d1", "sysA", 1, "on Tuesday"),
        ("d2", "sysA", 0): RcAnswer("d2", "sysA", 0, "A storm."),
        ("d1", "sysB", 0): RcAnswer("d1", "sysB", 0, "city"),
        ("d1", "sysB", 1): RcAnswer("d1", "sysB", 1, ""),
    }
    scorer = FileScorer(qa_pairs=qa_pairs, rc_answers=rc_answers)
    return documents, summaries, scorer


def test_roundtrip_verdicts():
    documents, summaries, scorer = roundtrip_fixture()
    verdicts = run_roundtrip(summaries, documents, scorer)
    by_key = {(v.doc_id, v.system_id, v.q_index): v for v in verdicts}
    assert len(verdicts) == 5
    assert by_key[("d1", "sysA", 0)].matched          # city vs City
    assert by_key[("d1", "sysA", 1)].matched is False  # tuesday vs on tuesday
    assert by_key[("d2", "sysA", 0)].matched          # a storm vs A storm.
    assert by_key[("d1", "sysB", 0)].matched is False  # united vs city
    assert by_key[("d1", "sysB", 1)].matched is False  # empty rc answer


def test_zero_question_summary_contributes_nothing():
    documents, summaries, scorer = roundtrip_fixture()
    summaries = summaries + [SummaryRecord("d2", "sysB", "nothing notable happened")]
    verdicts = run_roundtrip(summaries, documents, scorer)
    assert len(verdicts) == 5
    assert not any(v.system_id == "sysB" and v.doc_id == "d2" for v in verdicts)


def test_missing_document_raises():
    documents, summaries, scorer = roundtrip_fixture()
    summaries = summaries + [SummaryRecord("d9", "sysA", "a ghost summary")]
    with pytest.raises(MissingDocument):
        run_roundtrip(summaries, documents, scorer)


# --- accuracy ---------------------------------------------------------------------


def test_accuracy_counts_questions_not_summaries():
    documents, summaries, scorer = roundtrip_fixture()
    verdicts = run_roundtrip(summaries, documents, scorer)
    table = qa_accuracy(verdicts)
    assert table["sysA"].questions == 3
    assert table["sysA"].matched == 2
    assert table["sysA"].accuracy == pytest.approx(100.0 * 2 / 3)
    assert table["sysB"].questions == 2
    assert table["sysB"].accuracy == pytest.approx(0.0)


def test_accuracy_order_invariant():
    documents, summaries, scorer = roundtrip_fixture()
    verdicts = run_roundtrip(summaries, documents, scorer)
    assert qa_accuracy(list(reversed(verdicts))) == qa_accuracy(verdicts)


def test_no_questions_for_unknown_system():
    verdicts = [QaVerdict("d1", "sysA", 0, "x", "x", True)]
    with pytest.raises(NoQuestions):
        qa_accuracy(verdicts, systems=["sysA", "sysZ"])
    assert qa_accuracy(verdicts, systems=["sysA"])["sysA"].accuracy == 100.0


def test_all_matched_is_hundred():
    verdicts = [
        QaVerdict("d1", "s", 0, "x", "x", True),
        QaVerdict("d2", "s", 0, "y", "y", True),
    ]
    assert qa_accuracy(verdicts)["s"].accuracy == 100.0
