from __future__ import annotations

import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from webreview.corpus.stopwords import ENGLISH_STOPWORDS
from webreview.corpus.tokenize import Tokenizer, light_stem, tokenize, word_count
from webreview.protocol import TextConfig


def test_two_sentences_with_custom_stopwords():
    doc = tokenize("The API fails. Retry works.", stopwords={"the"})
    assert doc.tokens == ("api", "fails", "retry", "works")
    assert doc.sentence_spans == ((0, 2), (2, 4))


def test_empty_text():
    doc = tokenize("")
    assert doc.tokens == () and doc.sentence_spans == ()


def test_hyphenated_alphanumerics():
    assert tokenize("C3-PO runs", stopwords=set(), min_token_length=2).tokens == ("c3", "po", "runs")


def test_underscores_split_and_short_tokens_drop():
    assert tokenize("a snake_case x9 y", stopwords=set()).tokens == ("snake", "case", "x9")


def test_decimal_points_and_hosts_do_not_end_sentences():
    doc = tokenize("Version 3.5 on example.com broke! Then it healed?\nNew line here", stopwords=set())
    assert len(doc.sentence_spans) == 3


def test_sentence_chars_are_verbatim():
    text = "  First one here.   Second: one more!\n\nThird line"
    doc = tokenize(text, stopwords=set())
    assert [doc.sentence_text(i, text) for i in range(len(doc.sentence_spans))] == [
        "First one here.", "Second: one more!", "Third line"]


def test_bundled_stopwords():
    assert len(ENGLISH_STOPWORDS) == 205
    assert {"the", "and", "of"} <= ENGLISH_STOPWORDS
    assert "down" not in ENGLISH_STOPWORDS
    assert tokenize("The server went down").tokens == ("server", "went", "down")


@pytest.mark.parametrize("word, stem", [
    ("queries", "query"), ("classes", "class"), ("failing", "fail"), ("crashed", "crash"),
    ("timeouts", "timeout"), ("status", "status"), ("bus", "bus"), ("ran", "ran"), ("2024", "2024"),
])
def test_light_stem(word, stem):
    assert light_stem(word) == stem


def test_tokenizer_from_config():
    tok = Tokenizer.from_config(TextConfig(stopwords=("api",), extra_stopwords=("cloud",), min_token_length=3,
                                           stem=True))
    assert tok.terms("The cloud API queues go") == ["the", "queue"]


def test_word_count_is_unfiltered():
    assert word_count("The API, it fails at 3 a.m.") == 8


_text = st.text(alphabet=st.sampled_from(list("abcXYZ019 .!?\n-_,é")), max_size=120)


@given(_text)
def test_spans_partition_tokens(text):
    doc = tokenize(text, stopwords={"abc"})
    flat = [t for i in range(len(doc.sentence_spans)) for t in doc.sentence_tokens(i)]
    assert tuple(flat) == doc.tokens
    assert all(a < b for a, b in doc.sentence_spans)


@given(_text)
def test_tokens_match_regex_oracle(text):
    oracle = [w.lower() for w in re.findall(r"[^\W_]+", text)]
    oracle = [w for w in oracle if len(w) >= 2 and w != "abc"]
    assert list(tokenize(text, stopwords={"abc"}).tokens) == oracle


@given(_text)
def test_sentence_text_tokenizes_to_its_span(text):
    doc = tokenize(text, stopwords=set())
    for i in range(len(doc.sentence_spans)):
        piece = doc.sentence_text(i, text)
        assert piece == piece.strip()
        assert tokenize(piece, stopwords=set()).tokens == doc.sentence_tokens(i)
