from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from webreview._io import atomic_write_text


class EmptyCorpusError(ValueError):
    pass


class AllTermsFilteredError(ValueError):
    """Every term fell outside [min_df, max_df]; the thresholds need revising."""


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    document_frequency: tuple[int, ...]

    @cached_property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass(frozen=True, eq=False)
class DocumentTermMatrix:
    docs: tuple[str, ...]
    vocab: Vocabulary
    counts: sp.csr_matrix

    @property
    def n_docs(self) -> int:
        return len(self.docs)


def build_matrix(corpus: Sequence, min_df: int = 2, max_df_ratio: float = 0.9) -> DocumentTermMatrix:
    """Count matrix over a tokenized corpus.

    Keeps terms whose document frequency lies in ``[min_df, max_df_ratio * N]``.
    Terms are ordered lexicographically, documents as given.
    """
    if not corpus:
        raise EmptyCorpusError("cannot build a document-term matrix from an empty corpus")
    n = len(corpus)
    per_doc = [Counter(doc.tokens) for doc in corpus]
    df: Counter = Counter()
    for c in per_doc:
        df.update(c.keys())
    max_df = max_df_ratio * n + 1e-9
    terms = sorted(t for t, f in df.items() if min_df <= f <= max_df)
    if not terms:
        raise AllTermsFilteredError(
            f"no term has document frequency in [{min_df}, {max_df_ratio} * {n}]"
            f" ({len(df)} candidate terms)")
    vocab = Vocabulary(tuple(terms), tuple(df[t] for t in terms))
    index = vocab.index

    rows, cols, vals = [], [], []
    for i, c in enumerate(per_doc):
        for term, count in sorted(c.items()):
            j = index.get(term)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(count)
    counts = sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, len(terms)))
    return DocumentTermMatrix(tuple(doc.doc_id for doc in corpus), vocab, counts)


def idf_weights(document_frequency, n_docs: int) -> np.ndarray:
    """Smoothed idf, ``ln((1 + N) / (1 + df)) + 1``; never zero."""
    df = np.asarray(document_frequency, dtype=np.float64)
    return np.log((1.0 + n_docs) / (1.0 + df)) + 1.0


def l2_normalize_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(m, dtype=np.float64, copy=True)
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.csr_matrix(sp.diags(scale) @ m)


def tfidf(m: DocumentTermMatrix) -> sp.csr_matrix:
    """Row-normalized TF-IDF weights; all-zero rows stay zero."""
    idf = idf_weights(m.vocab.document_frequency, m.n_docs)
    weighted = sp.csr_matrix(m.counts, dtype=np.float64) @ sp.diags(idf)
    return l2_normalize_rows(weighted)


def write_matrix(m: DocumentTermMatrix, triplet_path, vocab_path) -> None:
    """Persist as sorted ``doc_id, term, count`` triplets plus a ``term, df`` file."""
    coo = m.counts.tocoo()
    triplets = sorted((m.docs[i], m.vocab.terms[j], int(v)) for i, j, v in zip(coo.row, coo.col, coo.data))
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["doc_id", "term", "count"])
    w.writerows(triplets)
    atomic_write_text(triplet_path, buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["term", "df"])
    w.writerows(zip(m.vocab.terms, m.vocab.document_frequency))
    atomic_write_text(vocab_path, buf.getvalue())


def read_matrix(triplet_path, vocab_path, docs: Sequence[str]) -> DocumentTermMatrix:
    with open(vocab_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))[1:]
    vocab = Vocabulary(tuple(r[0] for r in rows), tuple(int(r[1]) for r in rows))
    doc_index = {d: i for i, d in enumerate(docs)}
    r_idx, c_idx, vals = [], [], []
    with open(triplet_path, encoding="utf-8", newline="") as fh:
        for doc_id, term, count in list(csv.reader(fh, delimiter="\t"))[1:]:
            r_idx.append(doc_index[doc_id])
            c_idx.append(vocab.index[term])
            vals.append(int(count))
    counts = sp.csr_matrix((np.array(vals, dtype=np.int64), (r_idx, c_idx)), shape=(len(docs), len(vocab)))
    return DocumentTermMatrix(tuple(docs), vocab, counts)
