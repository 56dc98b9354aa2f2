from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from webreview._io import atomic_write_text
from webreview.extraction.segment import Segment


@dataclass(frozen=True)
class EvidenceTable:
    """Selected pages (rows) by schema attributes (columns); each cell lists segments."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict[tuple[str, str], tuple[Segment, ...]]

    def cell(self, doc_id: str, attribute: str) -> tuple[Segment, ...]:
        return self.cells.get((doc_id, attribute), ())

    def column(self, attribute: str) -> list[Segment]:
        return [s for doc_id in self.rows for s in self.cell(doc_id, attribute)]

    def segments(self) -> list[Segment]:
        return [s for doc_id in self.rows for a in self.columns for s in self.cell(doc_id, a)]

    def segment_index(self) -> dict[tuple[str, int], Segment]:
        return {s.ref: s for s in self.segments()}

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [
                {"doc_id": doc_id,
                 "cells": {a: [s.to_dict() for s in self.cell(doc_id, a)] for a in self.columns}}
                for doc_id in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceTable":
        columns = tuple(d["columns"])
        cells = {}
        for row in d["rows"]:
            for a in columns:
                segs = tuple(Segment.from_dict(s) for s in row["cells"].get(a, []))
                if segs:
                    cells[(row["doc_id"], a)] = segs
        return cls(tuple(r["doc_id"] for r in d["rows"]), columns, cells)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["doc_id", "attribute", "sentence_index", "code", "score", "text"])
        for s in self.segments():
            w.writerow([s.doc_id, s.attribute, s.sentence_index, s.code, repr(s.assignment_score), s.text])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def build_evidence_table(selected: Iterable[str], segments: Iterable[Segment],
                         columns: Sequence[str]) -> EvidenceTable:
    """Assemble the table: rows sorted by doc_id, cells in sentence order.

    Raises:
        ValueError: a segment belongs to an unselected document or an unknown column.
    """
    rows = tuple(sorted(set(selected)))
    row_set = set(rows)
    columns = tuple(columns)
    cells: dict[tuple[str, str], list[Segment]] = {}
    for seg in segments:
        if seg.doc_id not in row_set:
            raise ValueError(f"segment refers to unselected document {seg.doc_id}")
        if seg.attribute not in columns:
            raise ValueError(f"segment refers to unknown attribute {seg.attribute}")
        cells.setdefault((seg.doc_id, seg.attribute), []).append(seg)
    return EvidenceTable(
        rows, columns,
        {key: tuple(sorted(segs, key=lambda s: s.sentence_index)) for key, segs in sorted(cells.items())},
    )
