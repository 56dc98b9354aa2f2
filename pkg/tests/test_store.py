from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webreview.harvest.fetch import WebDocument, doc_id_for
from webreview.harvest.store import CorpusStore


def doc(url, text="plain ü text", status="ok"):
    return WebDocument(doc_id_for(url), url, "2024-01-01T00:00:00Z", 200, f"<p>{text}</p>", text, "T",
                       len(text.split()), status)


def test_write_read_get(tmp_path):
    docs = [doc("https://a/1"), doc("https://a/2", "zweite Seite ß", "http:404"), doc("https://b/")]
    store = CorpusStore(tmp_path)
    store.write(docs)
    assert store.exists()
    assert store.read_all() == docs
    for d in docs:
        assert store.get(d.doc_id) == d
    assert store.by_url()["https://b/"] == docs[2]


def test_duplicate_ids_rejected(tmp_path):
    with pytest.raises(ValueError):
        CorpusStore(tmp_path).write([doc("https://a/"), doc("https://a/")])


def test_rewrite_replaces(tmp_path):
    store = CorpusStore(tmp_path)
    store.write([doc("https://a/")])
    store.write([doc("https://b/")])
    assert [d.url for d in store] == ["https://b/"]
    assert list(store.index()) == [doc_id_for("https://b/")]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text(max_size=40), min_size=1, max_size=6))
def test_offsets_survive_arbitrary_text(tmp_path_factory, texts):
    store = CorpusStore(tmp_path_factory.mktemp("s"))
    docs = [doc(f"https://h/{i}", t) for i, t in enumerate(texts)]
    store.write(docs)
    assert [store.get(d.doc_id) for d in docs] == docs
