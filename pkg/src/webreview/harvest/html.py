"""Plain-text extraction from fetched HTML.

Uses the stdlib ``HTMLParser`` so malformed markup never raises; unclosed
tags simply leave their text in place.
"""

from __future__ import annotations

import re
from html.parser import HTMLParser

SKIP_TAGS = frozenset({
    "script", "style", "nav", "header", "footer", "noscript", "template",
    "head", "title", "svg", "iframe", "object",
})
BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "details",
    "dialog", "div", "dl", "dt", "fieldset", "figcaption", "figure", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "hr", "html", "li", "main", "ol", "p", "pre", "section",
    "summary", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
})
HEADINGS = frozenset({"h1", "h2", "h3", "h4", "h5", "h6"})
_WS = re.compile(r"[^\S\n]+")


class _TextCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self.skip: dict[str, int] = {}
        self.title_parts: list[str] | None = None
        self.title: str | None = None
        self.heading_parts: list[str] | None = None
        self.first_heading: str | None = None

    @property
    def skipping(self) -> bool:
        return any(self.skip.values())

    def handle_starttag(self, tag, attrs):
        if tag == "title" and self.title is None:
            self.title_parts = []
        if tag in SKIP_TAGS:
            self.skip[tag] = self.skip.get(tag, 0) + 1
        if tag in BLOCK_TAGS:
            self.chunks.append("\n")
        if tag in HEADINGS and self.first_heading is None and not self.skipping:
            self.heading_parts = []

    def handle_startendtag(self, tag, attrs):
        if tag in BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_endtag(self, tag):
        if tag == "title" and self.title_parts is not None:
            self.title = _squash("".join(self.title_parts))
            self.title_parts = None
        if tag in HEADINGS and self.heading_parts is not None:
            self.first_heading = _squash("".join(self.heading_parts))
            self.heading_parts = None
        if self.skip.get(tag):
            self.skip[tag] -= 1
        if tag in BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_data(self, data):
        if self.title_parts is not None:
            self.title_parts.append(data)
        if self.skipping:
            return
        if self.heading_parts is not None:
            self.heading_parts.append(data)
        self.chunks.append(data)


def _squash(text: str) -> str:
    return " ".join(text.split())


def extract_text(raw_html: str) -> tuple[str, str]:
    """Return ``(title, plain_text)`` for a page.

    Script, style, nav, header, footer and comments are dropped, block
    boundaries become newlines, entities are decoded and whitespace runs are
    collapsed. The title comes from ``<title>``, falling back to the first
    heading.
    """
    parser = _TextCollector()
    try:
        parser.feed(raw_html or "")
        parser.close()
    except Exception:  # HTMLParser is lenient, but never let a page abort a run
        pass
    if parser.title_parts is not None:
        parser.title = _squash("".join(parser.title_parts))
    if parser.heading_parts is not None and parser.first_heading is None:
        parser.first_heading = _squash("".join(parser.heading_parts))

    lines = (_WS.sub(" ", line).strip() for line in "".join(parser.chunks).split("\n"))
    text = "\n".join(line for line in lines if line)
    title = parser.title or parser.first_heading or ""
    return title, text
