"""Polite page fetching: robots exclusion, per-host spacing, bounded retries."""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import urlsplit
from urllib.robotparser import RobotFileParser

from webreview._io import read_json, sha256_text
from webreview.corpus.tokenize import word_count
from webreview.harvest.html import extract_text
from webreview.protocol import PolitenessConfig

logger = logging.getLogger(__name__)


def doc_id_for(url: str) -> str:
    return sha256_text(url)[:16]


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class WebDocument:
    doc_id: str
    url: str
    fetched_at: str
    http_status: int
    raw_html: str
    plain_text: str
    title: str
    token_count: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "WebDocument":
        return cls(**d)


@dataclass
class FetchResult:
    documents: list[WebDocument]
    failures: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        by_status: dict[str, int] = {}
        for f in self.failures:
            by_status[f["status"]] = by_status.get(f["status"], 0) + 1
        return {
            "requested": len(self.documents),
            "ok": sum(d.ok for d in self.documents),
            "failed": len(self.failures),
            "by_status": dict(sorted(by_status.items())),
        }


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class FetchResponse:
    status: int
    text: str
    content_type: str = "text/html"


class HttpTransport:
    polite = True

    def __init__(self, user_agent: str, session=None):
        if session is None:
            import requests
            session = requests.Session()
        self.session = session
        self.session.headers["User-Agent"] = user_agent

    def get(self, url: str, timeout: float) -> FetchResponse:
        try:
            resp = self.session.get(url, timeout=timeout, allow_redirects=True)
        except Exception as exc:
            raise TransportError(str(exc)) from exc
        return FetchResponse(resp.status_code, resp.text, resp.headers.get("Content-Type", ""))


class SnapshotTransport:
    """Serves pages captured earlier, for offline replay.

    ``index.json`` in the snapshot directory::

        {"captured_at": "2024-05-01T00:00:00Z",
         "pages": {"<url>": {"file": "pages/a.html", "status": 200}},
         "robots": {"https://host": "User-agent: *\\nDisallow: /private/"}}

    Unknown URLs answer 404. No network is touched, so no spacing is applied.
    """

    polite = False

    def __init__(self, snapshot_dir: str | Path):
        self.root = Path(snapshot_dir)
        index = read_json(self.root / "index.json")
        self.captured_at = index.get("captured_at", "1970-01-01T00:00:00Z")
        self.pages = index.get("pages", {})
        self.robots = index.get("robots", {})

    def get(self, url: str, timeout: float) -> FetchResponse:
        parts = urlsplit(url)
        if parts.path == "/robots.txt":
            body = self.robots.get(f"{parts.scheme}://{parts.netloc}")
            return FetchResponse(200, body, "text/plain") if body is not None else FetchResponse(404, "")
        entry = self.pages.get(url)
        if entry is None:
            return FetchResponse(404, "")
        text = (self.root / entry["file"]).read_text(encoding="utf-8") if entry.get("file") else ""
        return FetchResponse(int(entry.get("status", 200)), text, entry.get("content_type", "text/html"))


def _retryable(status: int) -> bool:
    return status == 429 or status >= 500


class _Host:
    def __init__(self, delay: float):
        self.delay = delay
        self.next_allowed = 0.0
        self.robots: RobotFileParser | None = None


class PoliteFetcher:
    def __init__(self, config: PolitenessConfig, transport, *,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        _check_config(config)
        self.config = config
        self.transport = transport
        self.clock = clock
        self.sleep = sleep
        self.polite = getattr(transport, "polite", True)
        self.request_log: list[tuple[str, float]] = []
        self._log_lock = threading.Lock()

    def _request(self, host: _Host, url: str) -> FetchResponse:
        if self.polite:
            wait = host.next_allowed - self.clock()
            if wait > 0:
                self.sleep(wait)
        with self._log_lock:
            self.request_log.append((url, self.clock()))
        try:
            return self.transport.get(url, self.config.timeout)
        finally:
            host.next_allowed = self.clock() + host.delay

    def _get_with_retries(self, host: _Host, url: str) -> tuple[FetchResponse | None, str]:
        error = ""
        for attempt in range(self.config.max_retries + 1):
            if attempt and self.polite:
                self.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                resp = self._request(host, url)
            except TransportError as exc:
                error = str(exc) or type(exc).__name__
                continue
            if _retryable(resp.status) and attempt < self.config.max_retries:
                continue
            return resp, ""
        return None, error

    def _load_robots(self, host: _Host, base: str) -> None:
        rp = RobotFileParser()
        resp, _ = self._get_with_retries(host, base + "/robots.txt")
        if resp is None or resp.status >= 500:
            rp.disallow_all = True
        elif resp.status in (401, 403):
            rp.disallow_all = True
        elif resp.status >= 400:
            rp.allow_all = True
        else:
            rp.parse(resp.text.splitlines())
            crawl_delay = rp.crawl_delay(self.config.user_agent)
            if crawl_delay:
                host.delay = max(host.delay, float(crawl_delay))
                # the robots request itself was spaced with the old delay
                host.next_allowed = max(host.next_allowed, self.clock() + host.delay)
        host.robots = rp

    def _fetch_one(self, host: _Host, url: str, fetched_at: str) -> WebDocument:
        doc_id = doc_id_for(url)
        if host.robots is not None and not host.robots.can_fetch(self.config.user_agent, url):
            return WebDocument(doc_id, url, fetched_at, 0, "", "", "", 0, "skipped:robots")
        resp, error = self._get_with_retries(host, url)
        if resp is None:
            return WebDocument(doc_id, url, fetched_at, 0, "", "", "", 0, f"error:{error}")
        if not 200 <= resp.status < 300:
            return WebDocument(doc_id, url, fetched_at, resp.status, resp.text or "", "", "", 0,
                               f"http:{resp.status}")
        ctype = (resp.content_type or "").lower()
        if ctype and "html" not in ctype and "text/plain" not in ctype:
            return WebDocument(doc_id, url, fetched_at, resp.status, "", "", "", 0, "skipped:content-type")
        title, text = extract_text(resp.text)
        return WebDocument(doc_id, url, fetched_at, resp.status, resp.text, text, title, word_count(text))

    def _fetch_host(self, base: str, urls: list[str]) -> list[WebDocument]:
        host = _Host(self.config.min_delay if self.polite else 0.0)
        if self.config.respect_robots:
            self._load_robots(host, base)
        docs = []
        for url in urls:
            fetched_at = getattr(self.transport, "captured_at", None) or utc_now()
            docs.append(self._fetch_one(host, url, fetched_at))
        return docs

    def fetch_all(self, urls: Iterable[str]) -> list[WebDocument]:
        by_host: dict[str, list[str]] = {}
        for url in urls:
            parts = urlsplit(url)
            by_host.setdefault(f"{parts.scheme}://{parts.netloc}", []).append(url)
        workers = max(1, min(self.config.max_workers, len(by_host)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {base: pool.submit(self._fetch_host, base, group) for base, group in by_host.items()}
            results = {base: f.result() for base, f in futures.items()}
        fetched = {d.url: d for docs in results.values() for d in docs}
        return [fetched[u] for u in urls]


def _check_config(config: PolitenessConfig) -> None:
    problems = []
    if config.min_delay < 0:
        problems.append("min_delay < 0")
    if config.max_retries < 0:
        problems.append("max_retries < 0")
    if config.timeout <= 0:
        problems.append("timeout <= 0")
    if config.backoff < 0:
        problems.append("backoff < 0")
    if config.max_workers < 1:
        problems.append("max_workers < 1")
    if problems:
        raise ValueError("malformed politeness config: " + ", ".join(problems))


def fetch_documents(records, config: PolitenessConfig, transport=None, *,
                    existing: Mapping[str, WebDocument] | None = None,
                    clock: Callable[[], float] = time.monotonic,
                    sleep: Callable[[float], None] = time.sleep) -> FetchResult:
    """Fetch one document per record.

    Per-document problems never raise: they are recorded in the document's
    ``status`` and listed in ``FetchResult.failures``. Successfully fetched
    documents found in ``existing`` are reused without a request. With
    ``transport=None`` nothing is requested and unknown URLs are marked
    ``skipped:offline``.

    Raises:
        ValueError: the politeness config is malformed.
    """
    _check_config(config)
    existing = existing or {}
    urls = [r if isinstance(r, str) else r.url for r in records]
    todo = [u for u in urls if not (u in existing and existing[u].ok)]
    fetched: dict[str, WebDocument] = {}
    if transport is None:
        for u in todo:
            fetched[u] = WebDocument(doc_id_for(u), u, "", 0, "", "", "", 0, "skipped:offline")
    elif todo:
        fetcher = PoliteFetcher(config, transport, clock=clock, sleep=sleep)
        fetched = {d.url: d for d in fetcher.fetch_all(todo)}
    docs = [fetched[u] if u in fetched else existing[u] for u in urls]
    failures = [{"doc_id": d.doc_id, "url": d.url, "status": d.status, "http_status": d.http_status}
                for d in docs if not d.ok]
    for f in failures:
        logger.info("fetch %s: %s", f["status"], f["url"])
    return FetchResult(docs, failures)

