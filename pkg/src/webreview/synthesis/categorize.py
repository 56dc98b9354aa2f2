"""Supervised categorization for columns whose categories are known beforehand."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from webreview.corpus.tokenize import Tokenizer
from webreview.synthesis.themes import ColumnThemes, SegmentSpace, Theme, label_theme

logger = logging.getLogger(__name__)

NEAR_TIE_MARGIN = 0.02


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _assign(sims: np.ndarray, floor: float) -> np.ndarray:
    best = np.argmax(sims, axis=1)  # first max -> declaration order
    top = sims[np.arange(len(sims)), best]
    return np.where(top >= floor, best, -1)


def categorize_column(segments: Sequence, categories: Sequence, *, attribute: str | None = None,
                      similarity_floor: float = 0.05, tokenizer: Tokenizer = Tokenizer(),
                      mode: str = "categorical") -> ColumnThemes:
    """Nearest-centroid assignment of a column's segments to predefined categories.

    Centroids start as the normalized TF-IDF vector of each category's seed
    terms, are refined once by averaging in the members they attracted, and
    then every segment is reassigned. Segments whose best cosine is below
    ``similarity_floor`` stay unassigned.

    Raises:
        ValueError: the column is not categorical or has no categories.
    """
    if mode != "categorical" or not categories:
        raise ValueError(f"attribute {attribute!r} is not categorical")
    segments = sorted(segments, key=lambda s: s.ref)
    if attribute is None:
        attribute = segments[0].attribute if segments else ""
    if not segments:
        return ColumnThemes(attribute, ())

    seg_tokens = [tokenizer.terms(s.text) for s in segments]
    cat_tokens = [[t for term in c.seed_terms for t in tokenizer.terms(term)] for c in categories]
    space = SegmentSpace(seg_tokens, extra_terms=[t for toks in cat_tokens for t in toks])
    X = space.transform(seg_tokens)
    C = space.transform(cat_tokens)

    first = _assign(X @ C.T, similarity_floor)
    refined = np.array([
        _normalize(np.vstack([C[c], X[first == c]]).mean(axis=0)) for c in range(len(categories))
    ])
    sims = X @ refined.T
    final = _assign(sims, similarity_floor)

    near_ties = []
    if len(categories) > 1:
        ordered = np.sort(sims, axis=1)
        for i in np.flatnonzero(final >= 0):
            margin = ordered[i, -1] - ordered[i, -2]
            if margin < NEAR_TIE_MARGIN:
                near_ties.append({"ref": list(segments[i].ref), "margin": float(margin)})
                logger.info("near tie for %s in %s (margin %.4f)", segments[i].ref, attribute, margin)

    themes = []
    for c, cat in enumerate(categories):
        members = final == c
        if not members.any():
            continue
        _, top_terms = label_theme(X, members, space.terms)
        themes.append(Theme(attribute, cat.label, tuple(segments[i].ref for i in np.flatnonzero(members)),
                            top_terms, "categorical"))
    unassigned = tuple(segments[i].ref for i in np.flatnonzero(final < 0))
    return ColumnThemes(attribute, tuple(themes), unassigned, tuple(near_ties),
                        {"method": "nearest-centroid", "similarity_floor": similarity_floor})
