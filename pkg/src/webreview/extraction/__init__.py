"""Schema-supervised topic modeling: page selection and raw data extraction."""

from webreview.extraction.evidence import EvidenceTable, build_evidence_table
from webreview.extraction.relevance import RelevanceScore, compile_seeds, score_relevance
from webreview.extraction.segment import Segment, segment_document
from webreview.extraction.topics import TopicModel, fit_topics

__all__ = [
    "EvidenceTable", "RelevanceScore", "Segment", "TopicModel", "build_evidence_table",
    "compile_seeds", "fit_topics", "score_relevance", "segment_document",
]
