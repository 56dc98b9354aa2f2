"""Append-only run manifest: one JSON line per stage execution."""

from __future__ import annotations

import json
from pathlib import Path

from webreview._io import canonical_json


class RunManifest:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def append(self, entry: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(entry, indent=None) + "\n")
            fh.flush()

    def last_success(self, stage: str) -> dict | None:
        """Latest entry where ``stage`` ran or was confirmed up to date."""
        for entry in reversed(self.entries()):
            if entry["stage"] == stage and entry["status"] in ("completed", "up-to-date"):
                return entry
        return None
