import datetime as dt
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semforecast.errors import CorpusError
from semforecast.textpipe import (
    Document,
    PeriodTermMatrix,
    build_period_counts,
    load_corpus,
    load_stopwords,
    parse_period_label,
    period_label,
    tfidf_weight,
    tokenize,
)

DATA = Path(__file__).parent / "data"


def _write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def _doc(date, id_, body):
    return Document(dt.date.fromisoformat(date), id_, body)


# -- load_corpus --------------------------------------------------------------

def test_jsonl_three_records_sorted(tmp_path):
    p = _write_jsonl(tmp_path / "c.jsonl", [
        {"id": "b", "date": "2016-03-02", "text": "later"},
        {"id": "a", "date": "2016-01-05", "text": "early"},
        {"id": "c", "date": "2016-02-10", "text": "middle"},
    ])
    docs = load_corpus(p)
    assert [d.id for d in docs] == ["a", "c", "b"]
    assert [d.body for d in docs] == ["early", "middle", "later"]


def test_invalid_month_names_line(tmp_path):
    p = _write_jsonl(tmp_path / "c.jsonl", [
        {"id": "a", "date": "2016-01-05", "text": "ok"},
        {"id": "b", "date": "2016-13-01", "text": "bad"},
    ])
    with pytest.raises(CorpusError) as info:
        load_corpus(p)
    assert info.value.line == 2
    assert ":2" in str(info.value)


def test_duplicate_id_is_fatal(tmp_path):
    p = _write_jsonl(tmp_path / "c.jsonl", [
        {"id": "x", "date": "2016-01-05", "text": "one"},
        {"id": "x", "date": "2016-02-05", "text": "two"},
    ])
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(p)


def test_empty_corpus_is_fatal(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="empty"):
        load_corpus(p)


def test_missing_fields_and_bad_json(tmp_path):
    with pytest.raises(CorpusError, match="date"):
        load_corpus(_write_jsonl(tmp_path / "a.jsonl", [{"id": "a", "text": "t"}]))
    bad = tmp_path / "b.jsonl"
    bad.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(CorpusError) as info:
        load_corpus(bad)
    assert info.value.line == 1


def test_directory_format(tmp_path):
    d = tmp_path / "docs"
    d.mkdir()
    (d / "2016-02-01_beta.txt").write_text("second", encoding="utf-8")
    (d / "2016-01-01_alpha.txt").write_text("first", encoding="utf-8")
    docs = load_corpus(d, format="directory")
    assert [(str(x.timestamp), x.id, x.body) for x in docs] == [
        ("2016-01-01", "alpha", "first"), ("2016-02-01", "beta", "second")]
    (d / "notes.txt").write_text("x", encoding="utf-8")
    with pytest.raises(CorpusError, match="YYYY-MM-DD"):
        load_corpus(d, format="directory")


def test_missing_path(tmp_path):
    with pytest.raises(CorpusError, match="does not exist"):
        load_corpus(tmp_path / "nope.jsonl")


# -- tokenize -------------------------------------------------------------------

def test_tokenize_reference_porter_output():
    # frozen output of the reference Porter stemmer
    assert tokenize("Profits increased strongly.", stopwords=set()) == [
        "profit", "increas", "strongli"]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_all_stopwords():
    stop = load_stopwords(DATA / "stopwords.txt")
    assert tokenize("the and of", stop) == []


def test_tokenize_drops_short_tokens_and_digits():
    assert tokenize("A 2016 x-ray I Q3 ok") == ["rai", "ok"]


@given(st.text(max_size=80))
def test_tokenize_output_is_lowercase_alpha(text):
    for tok in tokenize(text):
        assert tok.isascii() and tok.isalpha() and tok == tok.lower()


# -- build_period_counts ------------------------------------------------------

def test_counts_are_summed_per_period():
    docs = [_doc("2016-01-03", "a", "gain gain loss"),
            _doc("2016-01-20", "b", "gain risk"),
            _doc("2016-02-11", "c", "loss")]
    m = build_period_counts(docs, "monthly", vocab_policy=0.0)
    assert m.periods == ("2016-01", "2016-02")
    assert m.terms == ("gain", "loss", "risk")
    np.testing.assert_array_equal(m.counts, [[3, 1, 1], [0, 1, 0]])


def test_gap_period_is_zero_row():
    docs = [_doc("2016-01-03", "a", "gain"), _doc("2016-03-03", "b", "loss")]
    m = build_period_counts(docs, "monthly", vocab_policy=0.0)
    assert m.periods == ("2016-01", "2016-02", "2016-03")
    assert not m.counts[1].any()


def test_vocab_policy_threshold():
    docs = [_doc("2016-01-01", "a", "gain rare"), _doc("2016-02-01", "b", "gain"),
            _doc("2016-03-01", "c", "gain"), _doc("2016-04-01", "d", "gain")]
    m = build_period_counts(docs, "monthly", vocab_policy=0.5)
    assert m.terms == ("gain",)
    m = build_period_counts(docs, "monthly", vocab_policy=0.25)
    assert m.terms == ("gain", "rare")


def test_single_period_is_an_error():
    docs = [_doc("2016-01-01", "a", "gain"), _doc("2016-02-01", "b", "loss")]
    with pytest.raises(CorpusError, match="single period"):
        build_period_counts(docs, "quarterly")


def test_quarterly_labels():
    docs = [_doc("2016-02-01", "a", "gain"), _doc("2016-08-01", "b", "gain")]
    m = build_period_counts(docs, "quarterly", vocab_policy=0.0)
    assert m.periods == ("2016-Q1", "2016-Q2", "2016-Q3")


def test_stopwords_are_removed_from_counts():
    docs = [_doc("2016-01-01", "a", "the gain"), _doc("2016-02-01", "b", "the loss")]
    m = build_period_counts(docs, vocab_policy=0.0, stopwords={"the"})
    assert "the" not in m.terms


def test_merging_same_day_documents_is_additive():
    a = _doc("2016-01-05", "a", "gain loss loss")
    b = _doc("2016-01-05", "b", "gain risk")
    other = _doc("2016-02-05", "c", "risk")
    split = build_period_counts([a, b, other], vocab_policy=0.0)
    merged = build_period_counts(
        [_doc("2016-01-05", "ab", a.body + " " + b.body), other], vocab_policy=0.0)
    assert split.terms == merged.terms
    np.testing.assert_array_equal(split.counts, merged.counts)


def test_build_is_deterministic(tmp_path):
    docs = [_doc("2016-%02d-01" % (i % 9 + 1), str(i), "gain loss risk"[i % 5:]) for i in range(30)]
    a = build_period_counts(docs, vocab_policy=0.0)
    b = build_period_counts(list(reversed(docs)), vocab_policy=0.0)
    assert a.terms == b.terms
    np.testing.assert_array_equal(a.counts, b.counts)


_words = st.sampled_from(["gain", "loss", "risk", "profit", "debt", "growth"])


@st.composite
def _corpora(draw):
    n = draw(st.integers(1, 12))
    docs = []
    for i in range(n):
        month = draw(st.integers(1, 12))
        body = " ".join(draw(st.lists(_words, max_size=6)))
        docs.append(_doc(f"2015-{month:02d}-15", f"d{i}", body))
    docs.append(_doc("2016-06-15", "last", "gain"))
    return docs


@settings(max_examples=40, deadline=None)
@given(_corpora())
def test_period_axis_is_contiguous_and_increasing(docs):
    m = build_period_counts(docs, vocab_policy=0.0)
    ords = [parse_period_label(p)[1] for p in m.periods]
    assert ords == list(range(ords[0], ords[0] + len(ords)))
    first = min(d.timestamp for d in docs)
    assert m.periods[0] == f"{first.year:04d}-{first.month:02d}"
    assert m.periods[-1] == "2016-06"


# -- tf-idf -------------------------------------------------------------------

def _matrix(counts):
    counts = np.asarray(counts, dtype=np.int64)
    n, p = counts.shape
    return PeriodTermMatrix(tuple(period_label(24192 + i, "monthly") for i in range(n)),
                            tuple(f"t{j}" for j in range(p)), counts)


def test_term_in_every_period_has_zero_weight():
    w = tfidf_weight(_matrix([[1, 2], [3, 0], [5, 1]])).values
    np.testing.assert_array_equal(w[:, 0], 0.0)


def test_tfidf_hand_computation():
    w = tfidf_weight(_matrix([[2], [0], [1]])).values[:, 0]
    np.testing.assert_allclose(w, [2 * math.log(1.5), 0.0, math.log(1.5)], rtol=0, atol=1e-15)


def test_zero_row_stays_zero():
    w = tfidf_weight(_matrix([[1, 2], [0, 0], [0, 4]])).values
    np.testing.assert_array_equal(w[1], 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.lists(
    st.lists(st.integers(0, 4), min_size=3, max_size=3), min_size=n, max_size=n)))
def test_tfidf_nonnegative_and_zero_pattern(rows):
    m = _matrix(rows)
    w = tfidf_weight(m).values
    counts = np.asarray(rows)
    df = (counts > 0).sum(axis=0)
    assert (w >= 0).all()
    expect_zero = (counts == 0) | (df == counts.shape[0])[None, :]
    np.testing.assert_array_equal(w == 0, expect_zero)


def test_matrix_is_read_only_and_exports_csv(tmp_path):
    m = tfidf_weight(_matrix([[2, 1], [0, 1], [1, 1]]))
    with pytest.raises(ValueError):
        m.counts[0, 0] = 9
    m.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "period,t0,t1"
    assert len(lines) == 4
    assert lines[1].startswith("2016-01,")


def test_period_label_parsing():
    assert parse_period_label("2016-Q3") == ("quarterly", 2016 * 4 + 2)
    assert parse_period_label("2016-02") == ("monthly", 2016 * 12 + 1)
    with pytest.raises(ValueError):
        parse_period_label("2016-13")
