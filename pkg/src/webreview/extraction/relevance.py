"""Page selection from schema-attribute word frequencies."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from webreview.corpus.tokenize import TokenizedDoc, Tokenizer

logger = logging.getLogger(__name__)

Pattern = tuple[str, ...]


@dataclass(frozen=True)
class SeedIndex:
    """Seed terms of every attribute, tokenized exactly like the documents."""

    attributes: tuple[str, ...]
    patterns: tuple[tuple[Pattern, ...], ...]

    def for_attribute(self, name: str) -> tuple[Pattern, ...]:
        return self.patterns[self.attributes.index(name)]


def _compile_terms(terms: Sequence[str], tokenizer: Tokenizer, what: str) -> tuple[Pattern, ...]:
    out = []
    for term in terms:
        pattern = tuple(tokenizer.terms(term))
        if not pattern:
            logger.warning("%s term %r is removed entirely by the tokenizer; ignoring it", what, term)
        elif pattern not in out:
            out.append(pattern)
    return tuple(out)


@lru_cache(maxsize=64)
def compile_seeds(schema: tuple, tokenizer: Tokenizer = Tokenizer()) -> SeedIndex:
    return SeedIndex(
        tuple(a.name for a in schema),
        tuple(_compile_terms(a.seed_terms, tokenizer, f"seed ({a.name})") for a in schema),
    )


def match_positions(tokens: Sequence[str], pattern: Pattern) -> list[int]:
    """Start positions of every occurrence of ``pattern`` in ``tokens``."""
    n = len(pattern)
    first = pattern[0]
    return [i for i in range(len(tokens) - n + 1)
            if tokens[i] == first and tuple(tokens[i:i + n]) == pattern]


def count_hits(tokens: Sequence[str], patterns: Sequence[Pattern]) -> int:
    return sum(len(match_positions(tokens, p)) for p in patterns)


def covered_positions(tokens: Sequence[str], patterns: Sequence[Pattern]) -> set[int]:
    covered: set[int] = set()
    for p in patterns:
        for start in match_positions(tokens, p):
            covered.update(range(start, start + len(p)))
    return covered


@dataclass(frozen=True)
class RelevanceScore:
    doc_id: str
    per_attribute_hits: dict[str, int]
    score: float
    selected: bool
    reasons: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "per_attribute_hits": dict(self.per_attribute_hits),
            "score": self.score,
            "selected": self.selected,
            "reasons": list(self.reasons),
        }


def score_relevance(doc: TokenizedDoc, schema, criteria, *, tokenizer: Tokenizer = Tokenizer(),
                    token_count: int | None = None) -> RelevanceScore:
    """Attribute coverage of a document and the resulting selection decision.

    The score is the fraction of schema attributes with at least one seed
    hit, so a page that talks at length about one attribute cannot stand in
    for the others. ``token_count`` is the page's raw word count (defaults
    to the number of retained tokens).
    """
    schema = tuple(schema)
    seeds = compile_seeds(schema, tokenizer)
    hits = {name: count_hits(doc.tokens, pats) for name, pats in zip(seeds.attributes, seeds.patterns)}
    score = sum(1 for h in hits.values() if h > 0) / len(schema) if schema else 0.0

    if token_count is None:
        token_count = len(doc.tokens)
    reasons = []
    if score < criteria.relevance_threshold:
        reasons.append(f"score {score:.3f} < threshold {criteria.relevance_threshold}")
    if token_count < criteria.min_token_count:
        reasons.append(f"token_count {token_count} < {criteria.min_token_count}")
    for pattern in _compile_terms(criteria.required_terms, tokenizer, "required"):
        if not match_positions(doc.tokens, pattern):
            reasons.append(f"missing required term '{' '.join(pattern)}'")
    for pattern in _compile_terms(criteria.excluded_terms, tokenizer, "excluded"):
        if match_positions(doc.tokens, pattern):
            reasons.append(f"contains excluded term '{' '.join(pattern)}'")
    return RelevanceScore(doc.doc_id, hits, score, not reasons, tuple(reasons))
