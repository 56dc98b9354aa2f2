"""Unsupervised grouping of open columns: spherical k-means with silhouette-selected k."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from webreview.corpus.tokenize import Tokenizer
from webreview.synthesis.themes import ColumnThemes, SegmentSpace, Theme, label_theme, unique_label

logger = logging.getLogger(__name__)


def cosine_distances(X: np.ndarray) -> np.ndarray:
    D = 1.0 - X @ X.T
    np.clip(D, 0.0, 2.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def silhouette_samples(D: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-point silhouette from a precomputed distance matrix.

    Points in singleton clusters score 0. Requires at least two clusters.
    """
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise ValueError("silhouette needs at least two clusters")
    n = len(labels)
    s = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        size = own.sum()
        if size == 1:
            continue
        a = D[i, own].sum() / (size - 1)
        b = min(D[i, labels == c].mean() for c in clusters if c != labels[i])
        denom = max(a, b)
        s[i] = (b - a) / denom if denom > 0 else 0.0
    return s


def spherical_kmeans(X: np.ndarray, k: int, rng_seed: int = 0, max_iter: int = 100) -> np.ndarray:
    """Cluster unit-norm rows by cosine similarity.

    Seeding is farthest-point: the first center is drawn from ``rng_seed``,
    each next one is the point with the largest cosine distance to its
    nearest chosen center (lowest index on ties). Labels are renumbered in
    order of first appearance.
    """
    n = X.shape[0]
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    chosen = [int(rng.integers(n))]
    nearest = 1.0 - X @ X[chosen[0]]
    while len(chosen) < k:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, 1.0 - X @ X[nxt])
    centers = X[chosen].copy()

    labels = np.full(n, -1)
    for _ in range(max_iter):
        new = np.argmax(X @ centers.T, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                m = X[members].sum(axis=0)
                norm = np.linalg.norm(m)
                if norm > 0:
                    centers[c] = m / norm
    _, first_seen = np.unique(labels, return_index=True)
    remap = {old: new for new, old in enumerate(labels[np.sort(first_seen)])}
    return np.array([remap[x] for x in labels])


def _centroids(X, labels):
    ids = np.unique(labels)
    C = np.array([X[labels == c].sum(axis=0) for c in ids])
    norms = np.linalg.norm(C, axis=1)
    C[norms > 0] /= norms[norms > 0, None]
    return ids, C


def merge_small_clusters(X: np.ndarray, labels: np.ndarray, min_size: int) -> np.ndarray:
    """Fold clusters smaller than ``min_size`` into their nearest neighbour cluster."""
    labels = labels.copy()
    while True:
        ids, sizes = np.unique(labels, return_counts=True)
        if len(ids) < 2 or sizes.min() >= min_size:
            return labels
        small = ids[np.argmin(sizes)]
        ids, C = _centroids(X, labels)
        pos = int(np.flatnonzero(ids == small)[0])
        sims = C @ C[pos]
        sims[pos] = -np.inf
        labels[labels == small] = ids[int(np.argmax(sims))]


def _single_theme(attribute, segments, X, terms, reason, unassigned=()):
    label, top = label_theme(X, np.ones(len(segments), dtype=bool), terms)
    theme = Theme(attribute, label or "theme-1", tuple(s.ref for s in segments), top, "clustered")
    return ColumnThemes(attribute, (theme,), tuple(unassigned), (), {"method": "spherical-kmeans",
                                                                        "k": 1, "fallback": reason})


def cluster_column(segments: Sequence, k_range: Sequence[int] | None = None, rng_seed: int = 0, *,
                   attribute: str | None = None, min_cluster_size: int = 2,
                   tokenizer: Tokenizer = Tokenizer()) -> ColumnThemes:
    """Group an open column's segments into themes.

    ``k`` is the value in ``k_range`` (default ``2..min(8, n - 1)``, always
    clipped to ``n - 1``) with the highest mean silhouette; ties go to the
    smaller ``k``. Segments without any vocabulary term are left unassigned.
    Columns with fewer than two usable segments, or with identical segments,
    become a single theme.

    Raises:
        ValueError: an explicit ``k_range`` is empty.
    """
    if k_range is not None and len(list(k_range)) == 0:
        raise ValueError("k_range is empty")
    segments = sorted(segments, key=lambda s: s.ref)
    if attribute is None:
        attribute = segments[0].attribute if segments else ""
    if not segments:
        return ColumnThemes(attribute, ())

    tokens = [tokenizer.terms(s.text) for s in segments]
    space = SegmentSpace(tokens)
    X_all = space.transform(tokens)
    usable = np.linalg.norm(X_all, axis=1) > 0
    unassigned = [s.ref for s, ok in zip(segments, usable) if not ok]
    segs = [s for s, ok in zip(segments, usable) if ok]
    X = X_all[usable]
    n = len(segs)
    if n == 0:
        return ColumnThemes(attribute, (), tuple(unassigned))
    if n < 2:
        return _single_theme(attribute, segs, X, space.terms, "fewer than 2 segments", unassigned)

    D = cosine_distances(X)
    if D.max() < 1e-12:
        return _single_theme(attribute, segs, X, space.terms, "identical segments", unassigned)

    ks = sorted(set(k_range if k_range is not None else range(2, 9)))
    ks = [k for k in ks if 2 <= k <= n - 1]
    if not ks:
        return _single_theme(attribute, segs, X, space.terms, "k range empty after clipping", unassigned)

    scores: dict[int, float] = {}
    partitions: dict[int, np.ndarray] = {}
    for k in ks:
        labels = spherical_kmeans(X, k, rng_seed)
        if len(np.unique(labels)) < 2:
            continue
        partitions[k] = labels
        scores[k] = float(silhouette_samples(D, labels).mean())
    if not scores:
        return _single_theme(attribute, segs, X, space.terms, "no k produced two clusters", unassigned)

    best_k = min(scores)
    for k in sorted(scores):
        if scores[k] > scores[best_k] + 1e-12:
            best_k = k
    labels = merge_small_clusters(X, partitions[best_k], min_cluster_size)

    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    groups.sort(key=lambda idx: (-len(idx), segs[idx[0]].ref))
    themes, taken = [], set()
    for g, idx in enumerate(groups, start=1):
        members = np.zeros(n, dtype=bool)
        members[idx] = True
        label, top = label_theme(X, members, space.terms)
        themes.append(Theme(attribute, unique_label(label, taken, f"theme-{g}"),
                            tuple(segs[i].ref for i in idx), top, "clustered"))
    diagnostics = {
        "method": "spherical-kmeans",
        "k": int(best_k),
        "k_after_merge": len(groups),
        "silhouette": {str(k): v for k, v in sorted(scores.items())},
    }
    return ColumnThemes(attribute, tuple(themes), tuple(unassigned), (), diagnostics)
