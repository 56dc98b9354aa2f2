"""Codes to themes: categorization of known categories, clustering of open columns."""

from __future__ import annotations

from webreview.corpus.tokenize import Tokenizer
from webreview.synthesis.categorize import categorize_column
from webreview.synthesis.cluster import cluster_column, silhouette_samples, spherical_kmeans
from webreview.synthesis.themes import ColumnThemes, SegmentSpace, Theme, ThemeSet, label_theme


def synthesize_table(table, protocol, tokenizer: Tokenizer | None = None) -> ThemeSet:
    """Build themes for every column of an evidence table."""
    if tokenizer is None:
        tokenizer = Tokenizer.from_config(protocol.text)
    columns = []
    for attr in protocol.schema:
        cfg = protocol.synthesis_for(attr.name)
        segments = table.column(attr.name)
        if attr.mode == "categorical":
            col = categorize_column(segments, attr.categories, attribute=attr.name,
                                    similarity_floor=cfg.similarity_floor, tokenizer=tokenizer)
        else:
            col = cluster_column(segments, range(cfg.k_min, cfg.k_max + 1), protocol.rng_seed,
                                 attribute=attr.name, min_cluster_size=cfg.min_cluster_size,
                                 tokenizer=tokenizer)
        columns.append(col)
    return ThemeSet(tuple(columns))


__all__ = [
    "ColumnThemes", "SegmentSpace", "Theme", "ThemeSet", "categorize_column", "cluster_column",
    "label_theme", "silhouette_samples", "spherical_kmeans", "synthesize_table",
]
