"""Split selected pages into sentence segments and settle them into schema columns."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from webreview.corpus.tokenize import TokenizedDoc, Tokenizer
from webreview.extraction.relevance import compile_seeds, covered_positions
from webreview.extraction.topics import TopicModel

SEED_WEIGHT = 0.5
TOPIC_WEIGHT = 0.5


@dataclass(frozen=True)
class Segment:
    doc_id: str
    attribute: str
    sentence_index: int
    text: str
    code: str
    assignment_score: float

    @property
    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.sentence_index)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "Segment":
        return cls(**d)


def sentence_topic_mass(model: TopicModel, tokens, doc_prior: np.ndarray | None = None) -> np.ndarray:
    """Mean per-token topic posterior of a sentence.

    Each in-vocabulary token contributes ``phi[:, w] * prior`` normalized;
    the prior is the document's theta row when known, uniform otherwise.
    A sentence with no in-vocabulary token gets a uniform mass.
    """
    prior = np.full(model.K, 1.0 / model.K) if doc_prior is None else np.asarray(doc_prior)
    ids = [j for j in (model.term_index(t) for t in tokens) if j is not None]
    if not ids:
        return np.full(model.K, 1.0 / model.K)
    resp = model.phi[:, ids] * prior[:, None]
    resp /= resp.sum(axis=0, keepdims=True)
    return resp.mean(axis=1)


def score_sentences(doc: TokenizedDoc, schema, model: TopicModel, *, tokenizer: Tokenizer = Tokenizer(),
                    weights: tuple[float, float] = (SEED_WEIGHT, TOPIC_WEIGHT)) -> np.ndarray:
    """Sentence x attribute score matrix: ``w_seed * hit_rate + w_topic * topic_mass``."""
    schema = tuple(schema)
    seeds = compile_seeds(schema, tokenizer)
    prior = model.doc_topics(doc.doc_id)
    scores = np.zeros((len(doc.sentence_spans), len(schema)))
    for i in range(len(doc.sentence_spans)):
        tokens = doc.sentence_tokens(i)
        mass = sentence_topic_mass(model, tokens, prior)
        for a, attr in enumerate(schema):
            hit_rate = len(covered_positions(tokens, seeds.patterns[a])) / len(tokens)
            scores[i, a] = weights[0] * hit_rate + weights[1] * mass[model.seed_map[attr.name]]
    return scores


def code_label(tokens, model: TopicModel, topic: int, n: int = 3) -> str:
    """The sentence's ``n`` distinct terms with the highest weight in ``topic``."""
    def weight(term):
        j = model.term_index(term)
        return model.phi[topic, j] if j is not None else -1.0

    ranked = sorted(set(tokens), key=lambda t: (-weight(t), t))
    return " ".join(ranked[:n])


def segment_document(doc: TokenizedDoc, plain_text: str, schema, model: TopicModel,
                     min_assignment_score: float = 0.2, *, tokenizer: Tokenizer = Tokenizer(),
                     weights: tuple[float, float] = (SEED_WEIGHT, TOPIC_WEIGHT)) -> list[Segment]:
    """Assign each sentence to its best-scoring attribute, or leave it out.

    Ties go to the attribute declared first. The segment text is the
    sentence sliced verbatim out of ``plain_text``.
    """
    schema = tuple(schema)
    if not doc.sentence_spans:
        return []
    scores = score_sentences(doc, schema, model, tokenizer=tokenizer, weights=weights)
    segments = []
    for i, row in enumerate(scores):
        best = int(np.argmax(row))  # first maximum, i.e. schema order
        if row[best] < min_assignment_score:
            continue
        attr = schema[best].name
        segments.append(Segment(
            doc_id=doc.doc_id,
            attribute=attr,
            sentence_index=i,
            text=doc.sentence_text(i, plain_text),
            code=code_label(doc.sentence_tokens(i), model, model.seed_map[attr]),
            assignment_score=float(row[best]),
        ))
    return segments
