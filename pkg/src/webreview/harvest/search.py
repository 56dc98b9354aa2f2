"""Programmatic searching through configurable engine adapters."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping
from urllib.parse import quote_plus

from webreview._io import read_jsonl, write_jsonl
from webreview.harvest.urls import InvalidURLError, normalize_url, url_host

logger = logging.getLogger(__name__)


class SearchError(RuntimeError):
    def __init__(self, engine_id: str, message: str):
        self.engine_id = engine_id
        super().__init__(f"[{engine_id}] {message}")


class MalformedResponseError(SearchError):
    def __init__(self, engine_id: str, reason: str, excerpt: Any = ""):
        if not isinstance(excerpt, str):
            excerpt = json.dumps(excerpt, ensure_ascii=False, default=str)
        self.excerpt = excerpt[:200]
        super().__init__(engine_id, f"malformed response: {reason}; excerpt: {self.excerpt}")


class MissingCredentialError(SearchError):
    pass


class EngineTransportError(SearchError):
    pass


@dataclass(frozen=True)
class SearchResultRecord:
    url: str
    title: str
    snippet: str
    rank: int
    engine_id: str
    query: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SearchResultRecord":
        return cls(**{k: d[k] for k in ("url", "title", "snippet", "rank", "engine_id", "query")})


@dataclass(frozen=True)
class QgsScore:
    sensitivity: float
    precision: float
    retrieved_count: int
    qgs_hit_count: int
    qgs_size: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def lookup_path(obj: Any, path: str) -> Any:
    """Follow a dotted path (``items``, ``data.web.results``, ``hits.0.url``)."""
    if not path:
        return obj
    for part in path.split("."):
        if isinstance(obj, list) and part.lstrip("-").isdigit():
            obj = obj[int(part)]
        elif isinstance(obj, dict):
            obj = obj[part]
        else:
            raise KeyError(part)
    return obj


class FixtureAdapter:
    """Serves results from a local JSON file.

    The file is either an array of ``{url, title, snippet}`` objects in rank
    order (returned for every query) or an object mapping query strings to
    such arrays.
    """

    def __init__(self, engine_id: str, path: str | os.PathLike):
        self.engine_id = engine_id
        self.path = Path(path)

    def search(self, query: str, max_results: int) -> list[dict]:
        try:
            data = json.loads(self.path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise SearchError(self.engine_id, f"fixture file not found: {self.path}") from None
        except json.JSONDecodeError as exc:
            raise MalformedResponseError(self.engine_id, f"invalid JSON ({exc})") from None
        if isinstance(data, dict):
            data = data.get(query, [])
        if not isinstance(data, list):
            raise MalformedResponseError(self.engine_id, "expected a JSON array of results", data)
        return [_coerce_item(self.engine_id, item, "url", "title", "snippet")
                for item in data[:max_results]]


def _coerce_item(engine_id, item, url_path, title_path, snippet_path) -> dict:
    if not isinstance(item, dict):
        raise MalformedResponseError(engine_id, "result is not an object", item)
    try:
        url = lookup_path(item, url_path)
    except (KeyError, IndexError):
        raise MalformedResponseError(engine_id, f"result missing url field '{url_path}'", item) from None
    if not isinstance(url, str) or not url:
        raise MalformedResponseError(engine_id, "result url is not a string", item)

    def text(path):
        try:
            value = lookup_path(item, path)
        except (KeyError, IndexError):
            return ""
        return value if isinstance(value, str) else ""

    return {"url": url, "title": text(title_path), "snippet": text(snippet_path)}


class JsonRestAdapter:
    """Generic paginated JSON search API client driven by an engine config."""

    def __init__(self, config, session=None, *, max_retries: int = 3, backoff: float = 1.0,
                 timeout: float = 10.0, environ: Mapping[str, str] | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.engine_id = config.engine_id
        if session is None:
            import requests
            session = requests.Session()
        self.session = session
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.environ = os.environ if environ is None else environ
        self.sleep = sleep

    def _credential(self) -> str:
        name = self.config.credential_env
        if not name:
            return ""
        value = self.environ.get(name)
        if not value:
            raise MissingCredentialError(self.engine_id, f"environment variable {name} is not set")
        return value

    def _get_json(self, url: str) -> Any:
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.get(url, timeout=self.timeout)
            except Exception as exc:  # connection reset, DNS, timeout...
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = RuntimeError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise EngineTransportError(self.engine_id, f"HTTP {resp.status_code}")
            try:
                return resp.json()
            except ValueError:
                raise MalformedResponseError(self.engine_id, "response is not JSON", resp.text) from None
        raise EngineTransportError(
            self.engine_id, f"giving up after {self.max_retries + 1} attempts: {last}")

    def search(self, query: str, max_results: int) -> list[dict]:
        cfg = self.config
        credential = self._credential()
        out: list[dict] = []
        page = 1
        while len(out) < max_results:
            count = min(cfg.page_size, max_results - len(out))
            url = cfg.url_template.format(
                query=quote_plus(query), page=page, start=(page - 1) * cfg.page_size + 1,
                count=count, credential=quote_plus(credential),
            )
            body = self._get_json(url)
            try:
                items = lookup_path(body, cfg.results_path)
            except (KeyError, IndexError):
                # many APIs omit the results key on an empty page
                items = []
            if not isinstance(items, list):
                raise MalformedResponseError(self.engine_id, f"'{cfg.results_path}' is not a list", body)
            if not items:
                break
            out.extend(_coerce_item(self.engine_id, it, cfg.url_path, cfg.title_path, cfg.snippet_path)
                       for it in items)
            if len(items) < cfg.page_size:
                break
            page += 1
        return out[:max_results]


def build_adapters(protocol, *, offline: bool = False, session=None,
                   environ: Mapping[str, str] | None = None) -> list:
    adapters = []
    for eng in protocol.search.engines:
        if eng.kind == "fixture":
            adapters.append(FixtureAdapter(eng.engine_id, protocol.resolve_path(eng.path)))
        elif offline:
            logger.warning("offline mode: skipping json-rest engine %s", eng.engine_id)
        else:
            adapters.append(JsonRestAdapter(
                eng, session, max_retries=protocol.fetch.max_retries,
                backoff=protocol.fetch.backoff, timeout=protocol.fetch.timeout, environ=environ))
    return adapters


def _site_allowed(url: str, site_filters: Iterable[str] | None) -> bool:
    if not site_filters:
        return True
    host = url_host(url)
    return any(host == s or host.endswith("." + s) for s in site_filters)


def collect_results(protocol, adapters) -> list[SearchResultRecord]:
    """All records for every (query, engine) pair, normalized but not deduplicated."""
    records = []
    for query in protocol.search.query_strings:
        for adapter in adapters:
            raw = adapter.search(query, protocol.search.max_results_per_query)
            for rank, item in enumerate(raw, start=1):
                try:
                    url = normalize_url(item["url"])
                except InvalidURLError:
                    raise MalformedResponseError(adapter.engine_id, "result url is not an absolute http(s) URL",
                                                 item) from None
                if not _site_allowed(url, protocol.search.site_filters):
                    continue
                records.append(SearchResultRecord(url, item["title"], item["snippet"], rank,
                                                  adapter.engine_id, query))
    return records


def merge_results(records: Iterable[SearchResultRecord]) -> list[SearchResultRecord]:
    """Deduplicate by URL keeping the lowest rank (first seen on ties); sort by URL."""
    best: dict[str, SearchResultRecord] = {}
    for rec in records:
        kept = best.get(rec.url)
        if kept is None or rec.rank < kept.rank:
            best[rec.url] = rec
    return [best[u] for u in sorted(best)]


def run_search(protocol, adapters=None, *, offline: bool = False) -> list[SearchResultRecord]:
    """Run every query against every engine and return the merged result list."""
    if adapters is None:
        adapters = build_adapters(protocol, offline=offline)
    return merge_results(collect_results(protocol, adapters))


def evaluate_search_string(records, qgs) -> QgsScore:
    """Score retrieved records against the quasi-gold standard.

    Precision here is QGS-precision: hits over everything retrieved, since
    relevance judgments for non-QGS results do not exist yet.

    Raises:
        ValueError: the QGS set is empty.
    """
    qgs = set(qgs)
    if not qgs:
        raise ValueError("QGS set is empty; sensitivity is undefined")
    retrieved = {r if isinstance(r, str) else r.url for r in records}
    hits = len(retrieved & qgs)
    return QgsScore(
        sensitivity=hits / len(qgs),
        precision=hits / len(retrieved) if retrieved else 0.0,
        retrieved_count=len(retrieved),
        qgs_hit_count=hits,
        qgs_size=len(qgs),
    )


def write_search_results(path, records: Iterable[SearchResultRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


def read_search_results(path) -> list[SearchResultRecord]:
    return [SearchResultRecord.from_dict(d) for d in read_jsonl(path)]
