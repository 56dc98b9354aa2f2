"""The review protocol: every planning decision the pipeline consumes.

A protocol is a YAML document. Parsing is strict about structure (unknown
keys and wrong types are reported with the offending field path) and
lenient about presentation (seed terms are lowercased, QGS URLs are
normalized). All values are immutable once parsed.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from webreview.harvest.urls import InvalidURLError, normalize_url

MODES = ("categorical", "open")
ENGINE_KINDS = ("fixture", "json-rest")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return self.message


class ProtocolError(ValueError):
    pass


class ProtocolSyntaxError(ProtocolError):
    pass


class ProtocolSemanticError(ProtocolError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.message for d in self.diagnostics))


@dataclass(frozen=True)
class EngineConfig:
    """One search engine adapter.

    ``fixture`` engines read a local JSON file (``path``). ``json-rest``
    engines expand ``url_template`` (placeholders ``{query}``, ``{page}``,
    ``{start}``, ``{count}``, ``{credential}``) and pull records out of the
    response with dotted result paths.
    """

    engine_id: str
    kind: str
    path: str | None = None
    url_template: str | None = None
    credential_env: str | None = None
    results_path: str = ""
    url_path: str | None = None
    title_path: str = "title"
    snippet_path: str = "snippet"
    page_size: int = 10


@dataclass(frozen=True)
class SearchStrategy:
    query_strings: tuple[str, ...]
    engines: tuple[EngineConfig, ...]
    max_results_per_query: int = 50
    site_filters: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Category:
    label: str
    seed_terms: tuple[str, ...]


@dataclass(frozen=True)
class SchemaAttribute:
    name: str
    seed_terms: tuple[str, ...]
    mode: str = "open"
    categories: tuple[Category, ...] = ()


@dataclass(frozen=True)
class InclusionCriteria:
    min_token_count: int = 50
    relevance_threshold: float = 0.1
    required_terms: tuple[str, ...] = ()
    excluded_terms: tuple[str, ...] = ()


@dataclass(frozen=True)
class SynthesisConfig:
    attribute: str
    k_min: int = 2
    k_max: int = 8
    min_cluster_size: int = 2
    similarity_floor: float = 0.05


@dataclass(frozen=True)
class RuleMiningConfig:
    min_support: float = 0.1
    min_confidence: float = 0.6
    max_itemset_size: int = 4


@dataclass(frozen=True)
class TextConfig:
    # stopwords=None selects the bundled English list
    stopwords: tuple[str, ...] | None = None
    extra_stopwords: tuple[str, ...] = ()
    min_token_length: int = 2
    stem: bool = False
    min_df: int = 2
    max_df_ratio: float = 0.9


@dataclass(frozen=True)
class TopicConfig:
    # k=None means |schema| + 2, alpha=None means 50 / k
    k: int | None = None
    alpha: float | None = None
    beta: float = 0.01
    seed_boost: float = 25.0
    iterations: int = 1000
    min_assignment_score: float = 0.2


@dataclass(frozen=True)
class PolitenessConfig:
    min_delay: float = 1.0
    max_retries: int = 3
    timeout: float = 10.0
    backoff: float = 1.0
    respect_robots: bool = True
    user_agent: str = "webreview/0.1 (+evidence review crawler)"
    max_workers: int = 4
    snapshot_dir: str | None = None


@dataclass(frozen=True)
class ReviewProtocol:
    search: SearchStrategy
    schema: tuple[SchemaAttribute, ...]
    title: str = ""
    research_questions: tuple[str, ...] = ()
    qgs: tuple[str, ...] = ()
    inclusion: InclusionCriteria = InclusionCriteria()
    synthesis: tuple[SynthesisConfig, ...] = ()
    mining: RuleMiningConfig = RuleMiningConfig()
    rng_seed: int = 0
    text: TextConfig = TextConfig()
    topics: TopicConfig = TopicConfig()
    fetch: PolitenessConfig = PolitenessConfig()
    source_dir: str = field(default=".", compare=False, repr=False)

    @property
    def attribute_names(self) -> list[str]:
        return [a.name for a in self.schema]

    def attribute(self, name: str) -> SchemaAttribute:
        for a in self.schema:
            if a.name == name:
                return a
        raise KeyError(name)

    def synthesis_for(self, name: str) -> SynthesisConfig:
        for s in self.synthesis:
            if s.attribute == name:
                return s
        return SynthesisConfig(attribute=name)

    def resolve_path(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else Path(self.source_dir) / p

    @property
    def topic_count(self) -> int:
        return self.topics.k if self.topics.k is not None else len(self.schema) + 2


# ---------------------------------------------------------------------------
# Parsing


class _Reader:
    """Pulls typed values out of nested mappings and records diagnostics."""

    def __init__(self) -> None:
        self.diagnostics: list[Diagnostic] = []

    def error(self, code: str, path: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(code, path, message))

    def mapping(self, value: Any, path: str, allowed: set[str]) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.error("type", path, f"{path}: expected a mapping")
            return {}
        for key in value:
            if key not in allowed:
                self.error("unknown_field", f"{path}.{key}" if path else str(key),
                           f"{path + '.' if path else ''}{key}: unknown field")
        return value

    def scalar(self, d: dict, key: str, path: str, kind, default: Any = None, required=False):
        full = f"{path}.{key}" if path else key
        if key not in d or d[key] is None:
            if required:
                self.error("missing", full, f"{full}: required field missing")
            return default
        value = d[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is int and isinstance(value, bool):
            self.error("type", full, f"{full}: expected int")
            return default
        if not isinstance(value, kind):
            self.error("type", full, f"{full}: expected {getattr(kind, '__name__', kind)}")
            return default
        return value

    def strings(self, d: dict, key: str, path: str, default=None, required=False):
        full = f"{path}.{key}" if path else key
        if key not in d or d[key] is None:
            if required:
                self.error("missing", full, f"{full}: required field missing")
            return default
        value = d[key]
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            self.error("type", full, f"{full}: expected a list of strings")
            return default
        return tuple(value)

    def items(self, d: dict, key: str, path: str) -> list:
        full = f"{path}.{key}" if path else key
        value = d.get(key)
        if value is None:
            return []
        if not isinstance(value, list):
            self.error("type", full, f"{full}: expected a list")
            return []
        return value


def _lower(terms):
    return tuple(t.strip().lower() for t in terms) if terms is not None else None


def _parse_engine(r: _Reader, raw: Any, path: str) -> EngineConfig | None:
    d = r.mapping(raw, path, {f.name for f in fields(EngineConfig)})
    if not isinstance(raw, dict):
        return None
    return EngineConfig(
        engine_id=r.scalar(d, "engine_id", path, str, "", required=True),
        kind=r.scalar(d, "kind", path, str, "", required=True),
        path=r.scalar(d, "path", path, str),
        url_template=r.scalar(d, "url_template", path, str),
        credential_env=r.scalar(d, "credential_env", path, str),
        results_path=r.scalar(d, "results_path", path, str, ""),
        url_path=r.scalar(d, "url_path", path, str),
        title_path=r.scalar(d, "title_path", path, str, "title"),
        snippet_path=r.scalar(d, "snippet_path", path, str, "snippet"),
        page_size=r.scalar(d, "page_size", path, int, 10),
    )


def _parse_attribute(r: _Reader, raw: Any, path: str) -> SchemaAttribute | None:
    d = r.mapping(raw, path, {"name", "seed_terms", "mode", "categories"})
    if not isinstance(raw, dict):
        return None
    categories = []
    for j, c in enumerate(r.items(d, "categories", path)):
        cpath = f"{path}.categories[{j}]"
        cd = r.mapping(c, cpath, {"label", "seed_terms"})
        if isinstance(c, dict):
            categories.append(Category(
                label=r.scalar(cd, "label", cpath, str, "", required=True),
                seed_terms=_lower(r.strings(cd, "seed_terms", cpath, (), required=True)),
            ))
    return SchemaAttribute(
        name=r.scalar(d, "name", path, str, "", required=True),
        seed_terms=_lower(r.strings(d, "seed_terms", path, (), required=True)),
        mode=r.scalar(d, "mode", path, str, "open"),
        categories=tuple(categories),
    )


def _dataclass_from(r: _Reader, cls, raw: Any, path: str, kinds: dict[str, Any]):
    d = r.mapping(raw, path, set(kinds))
    kwargs = {}
    for key, kind in kinds.items():
        if kind == "strings":
            value = r.strings(d, key, path)
            if key in ("required_terms", "excluded_terms", "stopwords", "extra_stopwords"):
                value = _lower(value)
        else:
            value = r.scalar(d, key, path, kind)
        if value is not None:
            kwargs[key] = value
    return cls(**kwargs)


def _build(data: Any, source_dir: str) -> tuple[ReviewProtocol | None, list[Diagnostic]]:
    r = _Reader()
    top = r.mapping(data, "", {
        "title", "research_questions", "search", "qgs", "inclusion", "schema",
        "synthesis", "mining", "rng_seed", "text", "topics", "fetch",
    })
    if not isinstance(data, dict):
        return None, r.diagnostics or [Diagnostic("type", "", "protocol: expected a mapping")]

    sd = r.mapping(top.get("search"), "search",
                   {"query_strings", "engines", "max_results_per_query", "site_filters"})
    if "search" not in top:
        r.error("missing", "search", "search: required field missing")
    engines = [e for i, raw in enumerate(r.items(sd, "engines", "search"))
               if (e := _parse_engine(r, raw, f"search.engines[{i}]")) is not None]
    search = SearchStrategy(
        query_strings=r.strings(sd, "query_strings", "search", (), required=True),
        engines=tuple(engines),
        max_results_per_query=r.scalar(sd, "max_results_per_query", "search", int, 50),
        site_filters=_lower(r.strings(sd, "site_filters", "search")),
    )

    if "schema" not in top:
        r.error("missing", "schema", "schema: required field missing")
    schema = [a for i, raw in enumerate(r.items(top, "schema", ""))
              if (a := _parse_attribute(r, raw, f"schema[{i}]")) is not None]

    qgs = []
    for i, u in enumerate(r.strings(top, "qgs", "", ()) or ()):
        try:
            qgs.append(normalize_url(u))
        except InvalidURLError:
            qgs.append(u)  # reported by validate_protocol

    synthesis = []
    for i, raw in enumerate(r.items(top, "synthesis", "")):
        synthesis.append(_dataclass_from(r, SynthesisConfig, raw, f"synthesis[{i}]", {
            "attribute": str, "k_min": int, "k_max": int,
            "min_cluster_size": int, "similarity_floor": float,
        }))
    listed = {s.attribute for s in synthesis}
    for a in schema:
        if a.name not in listed:
            synthesis.append(SynthesisConfig(attribute=a.name))
            listed.add(a.name)

    protocol = ReviewProtocol(
        title=r.scalar(top, "title", "", str, ""),
        research_questions=r.strings(top, "research_questions", "", ()),
        search=search,
        qgs=tuple(qgs),
        inclusion=_dataclass_from(r, InclusionCriteria, top.get("inclusion"), "inclusion", {
            "min_token_count": int, "relevance_threshold": float,
            "required_terms": "strings", "excluded_terms": "strings",
        }),
        schema=tuple(schema),
        synthesis=tuple(synthesis),
        mining=_dataclass_from(r, RuleMiningConfig, top.get("mining"), "mining", {
            "min_support": float, "min_confidence": float, "max_itemset_size": int,
        }),
        rng_seed=r.scalar(top, "rng_seed", "", int, 0),
        text=_dataclass_from(r, TextConfig, top.get("text"), "text", {
            "stopwords": "strings", "extra_stopwords": "strings", "min_token_length": int,
            "stem": bool, "min_df": int, "max_df_ratio": float,
        }),
        topics=_dataclass_from(r, TopicConfig, top.get("topics"), "topics", {
            "k": int, "alpha": float, "beta": float, "seed_boost": float,
            "iterations": int, "min_assignment_score": float,
        }),
        fetch=_dataclass_from(r, PolitenessConfig, top.get("fetch"), "fetch", {
            "min_delay": float, "max_retries": int, "timeout": float, "backoff": float,
            "respect_robots": bool, "user_agent": str, "max_workers": int, "snapshot_dir": str,
        }),
        source_dir=source_dir,
    )
    return protocol, r.diagnostics


def parse_protocol(source: str, source_dir: str | Path = ".") -> ReviewProtocol:
    """Parse protocol text into a validated :class:`ReviewProtocol`.

    Relative paths inside the protocol (fixture files, snapshot directory)
    are resolved against ``source_dir``.

    Raises:
        ProtocolSyntaxError: the text is not well-formed YAML.
        ProtocolSemanticError: the document is well-formed but violates the
            protocol rules; ``diagnostics`` names every offending field.
    """
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ProtocolSyntaxError(f"malformed protocol document: {exc}") from None
    protocol, diagnostics = _build(data, str(source_dir))
    if protocol is not None:
        diagnostics = diagnostics + validate_protocol(protocol)
    if diagnostics:
        raise ProtocolSemanticError(diagnostics)
    return protocol


def load_protocol(path: str | Path) -> ReviewProtocol:
    path = Path(path)
    return parse_protocol(path.read_text(encoding="utf-8"), source_dir=path.parent.resolve())


# ---------------------------------------------------------------------------
# Validation


def _in_range(diags, value, lo, hi, path, lo_open=False):
    ok = (value > lo if lo_open else value >= lo) and value <= hi
    if not ok:
        diags.append(Diagnostic("range", path, f"{path} out of range"))


def validate_protocol(p: ReviewProtocol) -> list[Diagnostic]:
    """Check every protocol invariant; one diagnostic per violation."""
    d: list[Diagnostic] = []

    if not p.search.query_strings or not all(q.strip() for q in p.search.query_strings):
        d.append(Diagnostic("missing", "search.query_strings",
                            "search.query_strings must be a non-empty list of non-empty strings"))
    if p.search.max_results_per_query < 1:
        d.append(Diagnostic("range", "search.max_results_per_query",
                            "search.max_results_per_query out of range"))
    if not p.search.engines:
        d.append(Diagnostic("missing", "search.engines", "search.engines must list at least one engine"))
    seen_engines: set[str] = set()
    for i, e in enumerate(p.search.engines):
        path = f"search.engines[{i}]"
        if not e.engine_id or not _IDENT.match(e.engine_id):
            d.append(Diagnostic("identifier", f"{path}.engine_id", f"{path}.engine_id invalid identifier"))
        elif e.engine_id in seen_engines:
            d.append(Diagnostic("duplicate", f"{path}.engine_id",
                                f"{path}.engine_id duplicate engine '{e.engine_id}'"))
        seen_engines.add(e.engine_id)
        if e.kind not in ENGINE_KINDS:
            d.append(Diagnostic("choice", f"{path}.kind", f"{path}.kind must be one of {ENGINE_KINDS}"))
        elif e.kind == "fixture" and not e.path:
            d.append(Diagnostic("missing", f"{path}.path", f"{path}.path required for fixture engines"))
        elif e.kind == "json-rest":
            if not e.url_template or "{query}" not in e.url_template:
                d.append(Diagnostic("template", f"{path}.url_template",
                                    f"{path}.url_template must contain {{query}}"))
            if not e.url_path:
                d.append(Diagnostic("missing", f"{path}.url_path",
                                    f"{path}.url_path required for json-rest engines"))
            if e.page_size < 1:
                d.append(Diagnostic("range", f"{path}.page_size", f"{path}.page_size out of range"))

    for i, u in enumerate(p.qgs):
        try:
            normalize_url(u)
        except InvalidURLError:
            d.append(Diagnostic("invalid_url", f"qgs[{i}]", f"qgs[{i}] invalid URL"))

    if not p.schema:
        d.append(Diagnostic("missing", "schema", "schema must contain at least one attribute"))
    names: set[str] = set()
    for i, a in enumerate(p.schema):
        path = f"schema[{i}]"
        if not a.name or not _IDENT.match(a.name):
            d.append(Diagnostic("identifier", f"{path}.name", f"{path}.name invalid identifier {a.name!r}"))
        elif a.name in names:
            d.append(Diagnostic("duplicate", f"{path}.name", f"duplicate attribute name '{a.name}'"))
        names.add(a.name)
        if not a.seed_terms or not all(t.strip() for t in a.seed_terms):
            d.append(Diagnostic("missing", f"{path}.seed_terms", f"{path}.seed_terms must be non-empty"))
        elif any(t != t.lower() for t in a.seed_terms):
            d.append(Diagnostic("case", f"{path}.seed_terms", f"{path}.seed_terms must be lowercase"))
        if a.mode not in MODES:
            d.append(Diagnostic("choice", f"{path}.mode", f"{path}.mode must be one of {MODES}"))
        elif a.mode == "categorical":
            if len(a.categories) < 2:
                d.append(Diagnostic("categories_required", f"{path}.categories",
                                    f"{path} ({a.name}): categories required (at least 2 for categorical mode)"))
            labels = [c.label for c in a.categories]
            for lab in sorted({x for x in labels if labels.count(x) > 1}):
                d.append(Diagnostic("duplicate", f"{path}.categories",
                                    f"{path}.categories duplicate label '{lab}'"))
            for j, c in enumerate(a.categories):
                if not c.label:
                    d.append(Diagnostic("missing", f"{path}.categories[{j}].label",
                                        f"{path}.categories[{j}].label must be non-empty"))
                if not c.seed_terms:
                    d.append(Diagnostic("missing", f"{path}.categories[{j}].seed_terms",
                                        f"{path}.categories[{j}].seed_terms must be non-empty"))
        elif a.categories:
            d.append(Diagnostic("categories_forbidden", f"{path}.categories",
                                f"{path}.categories only allowed in categorical mode"))

    crit = p.inclusion
    if crit.min_token_count < 0:
        d.append(Diagnostic("range", "inclusion.min_token_count", "inclusion.min_token_count out of range"))
    _in_range(d, crit.relevance_threshold, 0.0, 1.0, "inclusion.relevance_threshold")

    counts: dict[str, int] = {}
    for s in p.synthesis:
        counts[s.attribute] = counts.get(s.attribute, 0) + 1
    for i, s in enumerate(p.synthesis):
        path = f"synthesis[{i}]"
        if s.attribute not in names:
            d.append(Diagnostic("reference", f"{path}.attribute",
                                f"{path}.attribute '{s.attribute}' is not a schema attribute"))
        if counts[s.attribute] > 1:
            d.append(Diagnostic("duplicate", f"{path}.attribute",
                                f"{path}.attribute '{s.attribute}' configured more than once"))
        if s.k_min < 2 or s.k_max < s.k_min:
            d.append(Diagnostic("range", f"{path}.k_min", f"{path} k range out of range"))
        if s.min_cluster_size < 1:
            d.append(Diagnostic("range", f"{path}.min_cluster_size", f"{path}.min_cluster_size out of range"))
        _in_range(d, s.similarity_floor, 0.0, 1.0, f"{path}.similarity_floor")
    for name in names:
        if name not in counts:
            d.append(Diagnostic("missing", "synthesis", f"synthesis: no configuration for attribute '{name}'"))

    _in_range(d, p.mining.min_support, 0.0, 1.0, "mining.min_support", lo_open=True)
    _in_range(d, p.mining.min_confidence, 0.0, 1.0, "mining.min_confidence", lo_open=True)
    if p.mining.max_itemset_size < 2:
        d.append(Diagnostic("range", "mining.max_itemset_size", "mining.max_itemset_size out of range"))

    if not isinstance(p.rng_seed, int) or p.rng_seed < 0:
        d.append(Diagnostic("range", "rng_seed", "rng_seed must be an unsigned integer"))

    t = p.text
    if t.min_token_length < 1:
        d.append(Diagnostic("range", "text.min_token_length", "text.min_token_length out of range"))
    if t.min_df < 1:
        d.append(Diagnostic("range", "text.min_df", "text.min_df out of range"))
    _in_range(d, t.max_df_ratio, 0.0, 1.0, "text.max_df_ratio", lo_open=True)

    tc = p.topics
    if tc.k is not None and tc.k < len(p.schema):
        d.append(Diagnostic("range", "topics.k", "topics.k must be at least the number of schema attributes"))
    if tc.alpha is not None and tc.alpha <= 0:
        d.append(Diagnostic("range", "topics.alpha", "topics.alpha out of range"))
    if tc.beta <= 0:
        d.append(Diagnostic("range", "topics.beta", "topics.beta out of range"))
    if tc.seed_boost <= 0:
        d.append(Diagnostic("range", "topics.seed_boost", "topics.seed_boost out of range"))
    if tc.iterations < 1:
        d.append(Diagnostic("range", "topics.iterations", "topics.iterations out of range"))
    _in_range(d, tc.min_assignment_score, 0.0, 1.0, "topics.min_assignment_score")

    f = p.fetch
    if f.min_delay < 0:
        d.append(Diagnostic("range", "fetch.min_delay", "fetch.min_delay out of range"))
    if f.max_retries < 0:
        d.append(Diagnostic("range", "fetch.max_retries", "fetch.max_retries out of range"))
    if f.timeout <= 0:
        d.append(Diagnostic("range", "fetch.timeout", "fetch.timeout out of range"))
    if f.backoff < 0:
        d.append(Diagnostic("range", "fetch.backoff", "fetch.backoff out of range"))
    if f.max_workers < 1:
        d.append(Diagnostic("range", "fetch.max_workers", "fetch.max_workers out of range"))
    return d


# ---------------------------------------------------------------------------
# Serialization


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def protocol_to_dict(p: ReviewProtocol) -> dict:
    """Plain-data rendering (also the JSON audit copy written to the workdir)."""
    data = _plain(asdict(p))
    data.pop("source_dir")
    return data


def dump_protocol(p: ReviewProtocol) -> str:
    """Render ``p`` as protocol text that :func:`parse_protocol` maps back to ``p``."""
    return yaml.safe_dump(protocol_to_dict(p), sort_keys=False, allow_unicode=True)
