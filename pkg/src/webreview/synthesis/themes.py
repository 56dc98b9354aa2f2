from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from webreview.corpus.matrix import idf_weights

Ref = tuple[str, int]


class SegmentSpace:
    """TF-IDF space fitted on one column's segments.

    ``extra_terms`` (category seed terms) join the vocabulary with document
    frequency counted over the segments only, so an unseen seed term simply
    gets the maximum idf.
    """

    def __init__(self, token_lists: Sequence[Sequence[str]], extra_terms: Sequence[str] = ()):
        df: Counter = Counter()
        for tokens in token_lists:
            df.update(set(tokens))
        self.terms = tuple(sorted(set(df) | set(extra_terms)))
        self.index = {t: i for i, t in enumerate(self.terms)}
        self.n_docs = len(token_lists)
        self.idf = idf_weights([df.get(t, 0) for t in self.terms], self.n_docs)

    def transform(self, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
        X = np.zeros((len(token_lists), len(self.terms)))
        for i, tokens in enumerate(token_lists):
            for term, count in Counter(tokens).items():
                j = self.index.get(term)
                if j is not None:
                    X[i, j] = count * self.idf[j]
        norms = np.linalg.norm(X, axis=1)
        nz = norms > 0
        X[nz] /= norms[nz, None]
        return X


@dataclass(frozen=True)
class Theme:
    attribute: str
    label: str
    member_refs: tuple[Ref, ...]
    top_terms: tuple[str, ...]
    origin: str

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "label": self.label,
            "member_refs": [list(r) for r in self.member_refs],
            "top_terms": list(self.top_terms),
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Theme":
        return cls(d["attribute"], d["label"], tuple((r[0], int(r[1])) for r in d["member_refs"]),
                   tuple(d["top_terms"]), d["origin"])


@dataclass(frozen=True)
class ColumnThemes:
    attribute: str
    themes: tuple[Theme, ...]
    unassigned: tuple[Ref, ...] = ()
    near_ties: tuple[dict, ...] = ()
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ThemeSet:
    columns: tuple[ColumnThemes, ...]

    def themes(self, attribute: str | None = None) -> list[Theme]:
        return [t for c in self.columns if attribute in (None, c.attribute) for t in c.themes]

    def unassigned(self, attribute: str) -> tuple[Ref, ...]:
        for c in self.columns:
            if c.attribute == attribute:
                return c.unassigned
        raise KeyError(attribute)

    def find(self, attribute: str, label: str) -> Theme | None:
        for t in self.themes(attribute):
            if t.label == label:
                return t
        return None

    def to_dict(self) -> dict:
        return {"columns": [
            {
                "attribute": c.attribute,
                "themes": [t.to_dict() for t in c.themes],
                "unassigned": [list(r) for r in c.unassigned],
                "near_ties": list(c.near_ties),
                "diagnostics": c.diagnostics,
            }
            for c in self.columns
        ]}

    @classmethod
    def from_dict(cls, d: dict) -> "ThemeSet":
        return cls(tuple(
            ColumnThemes(
                attribute=c["attribute"],
                themes=tuple(Theme.from_dict(t) for t in c["themes"]),
                unassigned=tuple((r[0], int(r[1])) for r in c["unassigned"]),
                near_ties=tuple(c.get("near_ties", ())),
                diagnostics=c.get("diagnostics", {}),
            )
            for c in d["columns"]
        ))

    def column_csv(self, attribute: str, segment_index: dict) -> str:
        """``theme_label, doc_id, sentence_index, code`` rows; unassigned rows have an empty label."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theme_label", "doc_id", "sentence_index", "code"])
        rows = [(t.label, ref) for t in self.themes(attribute) for ref in t.member_refs]
        rows += [("", ref) for ref in self.unassigned(attribute)]
        for label, (doc_id, idx) in rows:
            seg = segment_index.get((doc_id, idx))
            w.writerow([label, doc_id, idx, seg.code if seg else ""])
        return buf.getvalue()


def contrastive_weights(X: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Mean in-theme TF-IDF minus mean out-of-theme TF-IDF, per term."""
    members = np.asarray(members, dtype=bool)
    inside = X[members].mean(axis=0)
    outside = X[~members].mean(axis=0) if (~members).any() else np.zeros(X.shape[1])
    return inside - outside


def label_theme(X: np.ndarray, members, terms: Sequence[str], n_top: int = 10) -> tuple[str, tuple[str, ...]]:
    """Label a theme by its most contrastive terms.

    Returns ``(label, top_terms)`` where the label is the top three terms
    joined with hyphens. Only terms with positive contrast are used; ties are
    broken alphabetically.
    """
    weights = contrastive_weights(X, members)
    ranked = sorted((j for j in range(len(terms)) if weights[j] > 1e-12),
                    key=lambda j: (-weights[j], terms[j]))
    top = tuple(terms[j] for j in ranked[:n_top])
    return "-".join(top[:3]), top


def unique_label(label: str, taken: set[str], fallback: str) -> str:
    base = label or fallback
    out, n = base, 2
    while out in taken:
        out = f"{base}-{n}"
        n += 1
    taken.add(out)
    return out
