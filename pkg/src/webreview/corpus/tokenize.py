from __future__ import annotations

import re
from dataclasses import dataclass, field

from webreview.corpus.stopwords import ENGLISH_STOPWORDS

_WORD = re.compile(r"[^\W_]+")
# terminal punctuation only counts when followed by whitespace, so "3.5" and
# "example.com" stay inside one sentence
_SENTENCE_END = re.compile(r"[.!?]+(?=\s|$)|\n")


@dataclass(frozen=True)
class TokenizedDoc:
    """Tokens of one document plus its sentence structure.

    ``sentence_spans[i]`` is the half-open token range of sentence ``i`` and
    ``sentence_chars[i]`` the matching character range in the source text.
    Sentences without any retained token are dropped, so the spans are
    contiguous and cover every token.
    """

    doc_id: str
    tokens: tuple[str, ...]
    sentence_spans: tuple[tuple[int, int], ...]
    sentence_chars: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def sentence_tokens(self, i: int) -> tuple[str, ...]:
        start, end = self.sentence_spans[i]
        return self.tokens[start:end]

    def sentence_text(self, i: int, text: str) -> str:
        start, end = self.sentence_chars[i]
        return text[start:end]


def word_count(text: str) -> int:
    """Raw word count (letter/digit runs, no filtering)."""
    return sum(1 for _ in _WORD.finditer(text or ""))


def light_stem(token: str) -> str:
    """Conservative suffix stripping; only used when a protocol enables stemming."""
    if len(token) <= 3 or token.isdigit():
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("sses"):
        return token[:-2]
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


@dataclass(frozen=True)
class Tokenizer:
    stopwords: frozenset[str] = ENGLISH_STOPWORDS
    min_token_length: int = 2
    stem: bool = False

    @classmethod
    def from_config(cls, text_config) -> "Tokenizer":
        base = ENGLISH_STOPWORDS if text_config.stopwords is None else frozenset(text_config.stopwords)
        return cls(
            stopwords=frozenset(base | set(text_config.extra_stopwords)),
            min_token_length=text_config.min_token_length,
            stem=text_config.stem,
        )

    def terms(self, text: str) -> list[str]:
        out = []
        for m in _WORD.finditer(text):
            tok = m.group().lower()
            if len(tok) < self.min_token_length or tok in self.stopwords:
                continue
            out.append(light_stem(tok) if self.stem else tok)
        return out

    def __call__(self, text: str, doc_id: str = "") -> TokenizedDoc:
        text = text or ""
        tokens: list[str] = []
        spans: list[tuple[int, int]] = []
        chars: list[tuple[int, int]] = []
        start = 0
        boundaries = [m.end() for m in _SENTENCE_END.finditer(text)]
        if not boundaries or boundaries[-1] < len(text):
            boundaries.append(len(text))
        for end in boundaries:
            piece = text[start:end]
            terms = self.terms(piece)
            if terms:
                lead = len(piece) - len(piece.lstrip())
                trail = len(piece.rstrip())
                spans.append((len(tokens), len(tokens) + len(terms)))
                chars.append((start + lead, start + trail))
                tokens.extend(terms)
            start = end
        return TokenizedDoc(doc_id, tuple(tokens), tuple(spans), tuple(chars))


def tokenize(text: str, stopwords=ENGLISH_STOPWORDS, min_token_length: int = 2, *,
             stem: bool = False, doc_id: str = "") -> TokenizedDoc:
    """Lowercased letter/digit tokens with stopwords and short tokens removed."""
    return Tokenizer(frozenset(stopwords), min_token_length, stem)(text, doc_id)
