"""Synthetic corpora with known structure, used as generators-as-oracles."""

from __future__ import annotations

import numpy as np

from webreview.corpus.tokenize import TokenizedDoc
from webreview.protocol import SchemaAttribute

TOPIC_WORDS = (
    tuple(f"alpha{i}" for i in range(10)),
    tuple(f"bravo{i}" for i in range(10)),
    tuple(f"charlie{i}" for i in range(10)),
)


def topic_corpus(n_docs: int = 60, doc_len: int = 50, concentration: float = 0.3, seed: int = 2024):
    """Documents drawn from Dirichlet mixtures of three disjoint 10-term topics.

    Within a topic, terms are drawn uniformly. Returns the tokenized corpus
    and a schema whose attribute ``i`` is seeded with three terms of topic ``i``.
    """
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n_docs):
        mix = rng.dirichlet([concentration] * 3)
        topics = rng.choice(3, size=doc_len, p=mix)
        tokens = tuple(TOPIC_WORDS[t][rng.integers(10)] for t in topics)
        docs.append(TokenizedDoc(f"doc{d:02d}", tokens, ((0, doc_len),)))
    schema = tuple(SchemaAttribute(f"attr{i}", words[:3]) for i, words in enumerate(TOPIC_WORDS))
    return docs, schema


def greedy_match(model, n: int = 10) -> dict[int, tuple[int, int]]:
    """Map each generator topic to a distinct fitted topic by top-``n`` overlap, best pairs first."""
    overlap = {(g, k): len(set(TOPIC_WORDS[g]) & set(model.top_terms(k, n)))
               for g in range(3) for k in range(model.K)}
    match: dict[int, tuple[int, int]] = {}
    used = set()
    for (g, k), v in sorted(overlap.items(), key=lambda kv: (-kv[1], kv[0])):
        if g not in match and k not in used:
            match[g] = (k, v)
            used.add(k)
    return match


def two_group_segments(per_group: int = 10, seed: int = 5):
    """Sentences over two disjoint vocabularies, returned with their true group."""
    from webreview.extraction.segment import Segment

    rng = np.random.default_rng(seed)
    vocab = (["crash", "hang", "outage", "reboot", "dead", "unresponsive"],
             ["latency", "slow", "delay", "timeout", "lag", "late"])
    segments, truth = [], {}
    for g in range(2):
        for i in range(per_group):
            words = rng.choice(vocab[g], size=5)
            seg = Segment(f"g{g}doc{i:02d}", "issue", i, " ".join(words) + ".", "", 1.0)
            segments.append(seg)
            truth[seg.ref] = g
    return segments, truth
