"""Corpus store: JSON Lines of WebDocument records plus a doc_id -> byte offset index."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from filelock import FileLock

from webreview._io import atomic_write_text, canonical_json, read_json
from webreview.harvest.fetch import WebDocument


class CorpusStore:
    """Append-free document store; every ``write`` replaces the whole corpus atomically.

    Readers only ever see a complete file because both files are renamed into
    place, and a lock file keeps concurrent writers out.
    """

    def __init__(self, directory: str | Path, name: str = "corpus"):
        self.directory = Path(directory)
        self.data_path = self.directory / f"{name}.jsonl"
        self.index_path = self.directory / f"{name}.index.json"
        self._lock = FileLock(str(self.directory / f".{name}.lock"))

    def exists(self) -> bool:
        return self.data_path.exists() and self.index_path.exists()

    def write(self, documents: Iterable[WebDocument]) -> None:
        lines = []
        index = {}
        offset = 0
        for doc in documents:
            if doc.doc_id in index:
                raise ValueError(f"duplicate doc_id {doc.doc_id} ({doc.url})")
            line = canonical_json(doc.to_dict(), indent=None) + "\n"
            index[doc.doc_id] = offset
            offset += len(line.encode("utf-8"))
            lines.append(line)
        self.directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            atomic_write_text(self.data_path, "".join(lines))
            atomic_write_text(self.index_path, canonical_json(index))

    def index(self) -> dict[str, int]:
        return read_json(self.index_path)

    def __iter__(self) -> Iterator[WebDocument]:
        with open(self.data_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield WebDocument.from_dict(json.loads(line))

    def read_all(self) -> list[WebDocument]:
        return list(self)

    def get(self, doc_id: str) -> WebDocument:
        offset = self.index()[doc_id]
        with open(self.data_path, "rb") as fh:
            fh.seek(offset)
            return WebDocument.from_dict(json.loads(fh.readline().decode("utf-8")))

    def by_url(self) -> dict[str, WebDocument]:
        return {d.url: d for d in self}
