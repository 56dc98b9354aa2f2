"""Tokens, vocabulary, document-term counts and TF-IDF weights."""

from webreview.corpus.matrix import (
    AllTermsFilteredError,
    DocumentTermMatrix,
    EmptyCorpusError,
    Vocabulary,
    build_matrix,
    idf_weights,
    l2_normalize_rows,
    read_matrix,
    tfidf,
    write_matrix,
)
from webreview.corpus.stopwords import ENGLISH_STOPWORDS
from webreview.corpus.tokenize import TokenizedDoc, Tokenizer, light_stem, tokenize, word_count

__all__ = [
    "AllTermsFilteredError", "DocumentTermMatrix", "ENGLISH_STOPWORDS", "EmptyCorpusError",
    "TokenizedDoc", "Tokenizer", "Vocabulary", "build_matrix", "idf_weights", "l2_normalize_rows",
    "light_stem", "read_matrix", "tfidf", "tokenize", "word_count", "write_matrix",
]
