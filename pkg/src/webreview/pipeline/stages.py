"""Pipeline stages, dependency checks and hash-gated re-execution.

Every stage reads its inputs from and writes its outputs to plain files
under the workdir. A stage is skipped when the manifest shows it last ran
on exactly the current inputs and its outputs are untouched.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from filelock import FileLock, Timeout

import webreview
from webreview._io import (
    atomic_write_text, canonical_json, read_json, read_jsonl, sha256_file, sha256_text,
    write_json, write_jsonl,
)
from webreview.corpus.matrix import build_matrix, write_matrix
from webreview.corpus.tokenize import Tokenizer
from webreview.extraction.evidence import EvidenceTable, build_evidence_table
from webreview.extraction.relevance import RelevanceScore, score_relevance
from webreview.extraction.segment import segment_document
from webreview.extraction.topics import fit_topics
from webreview.harvest.fetch import HttpTransport, SnapshotTransport, fetch_documents, utc_now
from webreview.harvest.search import (
    build_adapters, collect_results, evaluate_search_string, merge_results, read_search_results,
    write_search_results,
)
from webreview.harvest.store import CorpusStore
from webreview.pipeline.manifest import RunManifest
from webreview.protocol import ReviewProtocol, load_protocol, protocol_to_dict
from webreview.rules import assemble_model, build_transactions, generate_rules, mine_frequent_itemsets
from webreview.synthesis import synthesize_table
from webreview.synthesis.themes import ThemeSet

logger = logging.getLogger(__name__)

STAGES = ("search", "fetch", "select", "extract", "synthesize", "mine", "report")
REQUIRES = {
    "search": (),
    "fetch": ("search",),
    "select": ("fetch",),
    "extract": ("select", "fetch"),
    "synthesize": ("extract",),
    "mine": ("synthesize", "extract"),
    "report": ("mine", "synthesize", "extract", "select", "fetch", "search"),
}

SEARCH_RESULTS = "search/results.jsonl"
QGS_SCORES = "search/qgs_scores.json"
CORPUS_DIR = "fetch"
CORPUS = "fetch/corpus.jsonl"
CORPUS_INDEX = "fetch/corpus.index.json"
FETCH_SUMMARY = "fetch/fetch_summary.json"
RELEVANCE = "select/relevance.jsonl"
SELECTED = "select/selected.json"
TOPIC_MODEL = "extract/topic_model.json"
EVIDENCE_JSON = "extract/evidence_table.json"
EVIDENCE_CSV = "extract/evidence_table.csv"
DTM = "extract/dtm.tsv"
VOCAB = "extract/vocab.tsv"
THEMES = "synthesize/themes.json"
TRANSACTIONS = "mine/transactions.jsonl"
MODEL = "mine/model.json"
RULES_CSV = "mine/rules.csv"
RULES_DOT = "mine/rules.dot"
REPORT_MD = "report/report.md"
REPORT_JSON = "report/report.json"
PROTOCOL_JSON = "protocol.json"
MANIFEST = "manifest.jsonl"


class PipelineError(RuntimeError):
    exit_code = 2


class StageFailure(PipelineError):
    exit_code = 2


class DependencyMissing(PipelineError):
    exit_code = 3


class HashMismatch(PipelineError):
    exit_code = 3


class WorkdirBusy(PipelineError):
    exit_code = 2


@dataclass
class Context:
    protocol: ReviewProtocol
    workdir: Path
    offline: bool = False
    force: bool = False

    def path(self, rel: str) -> Path:
        return self.workdir / rel

    @property
    def tokenizer(self) -> Tokenizer:
        return Tokenizer.from_config(self.protocol.text)

    @property
    def protocol_hash(self) -> str:
        return sha256_text(canonical_json(protocol_to_dict(self.protocol)))


# ---------------------------------------------------------------------------
# Stage bodies. Each returns the list of output paths (relative to workdir).


def _stage_search(ctx: Context) -> list[str]:
    p = ctx.protocol
    raw = collect_results(p, build_adapters(p, offline=ctx.offline))
    merged = merge_results(raw)
    write_search_results(ctx.path(SEARCH_RESULTS), merged)

    scores: dict = {"precision_kind": "QGS-precision", "qgs_size": len(set(p.qgs))}
    if p.qgs:
        scores["overall"] = evaluate_search_string(merged, p.qgs).to_dict()
        scores["per_query"] = {
            q: evaluate_search_string(merge_results(r for r in raw if r.query == q), p.qgs).to_dict()
            for q in p.search.query_strings
        }
    else:
        scores["overall"] = None
        scores["per_query"] = {}
        scores["note"] = "protocol has no QGS; sensitivity not computed"
    write_json(ctx.path(QGS_SCORES), scores)
    return [SEARCH_RESULTS, QGS_SCORES]


def _stage_fetch(ctx: Context) -> list[str]:
    p = ctx.protocol
    records = read_search_results(ctx.path(SEARCH_RESULTS))
    store = CorpusStore(ctx.path(CORPUS_DIR))
    existing = {}
    if ctx.offline:
        existing = store.by_url() if store.exists() else {}
        transport = SnapshotTransport(p.resolve_path(p.fetch.snapshot_dir)) if p.fetch.snapshot_dir else None
    else:
        transport = HttpTransport(p.fetch.user_agent)
    result = fetch_documents(records, p.fetch, transport, existing=existing)
    store.write(result.documents)
    write_json(ctx.path(FETCH_SUMMARY), {"summary": result.summary(), "failures": result.failures})
    return [CORPUS, CORPUS_INDEX, FETCH_SUMMARY]


def _ok_documents(ctx: Context):
    return [d for d in CorpusStore(ctx.path(CORPUS_DIR)) if d.ok]


def _stage_select(ctx: Context) -> list[str]:
    p = ctx.protocol
    tok = ctx.tokenizer
    rows = []
    for doc in CorpusStore(ctx.path(CORPUS_DIR)):
        if not doc.ok:
            rows.append(RelevanceScore(doc.doc_id, {a.name: 0 for a in p.schema}, 0.0, False,
                                       (f"fetch status {doc.status}",)))
            continue
        rows.append(score_relevance(tok(doc.plain_text, doc.doc_id), p.schema, p.inclusion,
                                    tokenizer=tok, token_count=doc.token_count))
    rows.sort(key=lambda r: r.doc_id)
    write_jsonl(ctx.path(RELEVANCE), (r.to_dict() for r in rows))
    write_json(ctx.path(SELECTED), sorted(r.doc_id for r in rows if r.selected))
    return [RELEVANCE, SELECTED]


def _stage_extract(ctx: Context) -> list[str]:
    p = ctx.protocol
    tok = ctx.tokenizer
    selected = set(read_json(ctx.path(SELECTED)))
    docs = sorted((d for d in _ok_documents(ctx) if d.doc_id in selected), key=lambda d: d.doc_id)
    columns = p.attribute_names
    outputs = [TOPIC_MODEL, EVIDENCE_JSON, EVIDENCE_CSV]
    if not docs:
        write_json(ctx.path(TOPIC_MODEL), {"skipped": "no selected documents"})
        table = build_evidence_table([], [], columns)
    else:
        tokenized = [tok(d.plain_text, d.doc_id) for d in docs]
        matrix = build_matrix(tokenized, p.text.min_df, p.text.max_df_ratio)
        write_matrix(matrix, ctx.path(DTM), ctx.path(VOCAB))
        outputs += [DTM, VOCAB]
        tc = p.topics
        model = fit_topics(matrix, p.schema, p.topic_count, tc.alpha, tc.beta, tc.seed_boost,
                           tc.iterations, p.rng_seed, tokenizer=tok)
        write_json(ctx.path(TOPIC_MODEL), model.to_dict())
        segments = []
        for doc, td in zip(docs, tokenized):
            segments += segment_document(td, doc.plain_text, p.schema, model, tc.min_assignment_score,
                                         tokenizer=tok)
        table = build_evidence_table([d.doc_id for d in docs], segments, columns)
    write_json(ctx.path(EVIDENCE_JSON), table.to_dict())
    table.write_csv(ctx.path(EVIDENCE_CSV))
    return outputs


def _themes_csv(attr: str) -> str:
    return f"synthesize/themes_{attr}.csv"


def _stage_synthesize(ctx: Context) -> list[str]:
    table = EvidenceTable.from_dict(read_json(ctx.path(EVIDENCE_JSON)))
    themes = synthesize_table(table, ctx.protocol, ctx.tokenizer)
    write_json(ctx.path(THEMES), themes.to_dict())
    index = table.segment_index()
    outputs = [THEMES]
    for attr in ctx.protocol.attribute_names:
        atomic_write_text(ctx.path(_themes_csv(attr)), themes.column_csv(attr, index))
        outputs.append(_themes_csv(attr))
    return outputs


def _stage_mine(ctx: Context) -> list[str]:
    p = ctx.protocol
    table = EvidenceTable.from_dict(read_json(ctx.path(EVIDENCE_JSON)))
    themes = ThemeSet.from_dict(read_json(ctx.path(THEMES)))
    transactions = build_transactions(table, themes)
    write_jsonl(ctx.path(TRANSACTIONS), ({"doc_id": t.doc_id, "items": sorted(map(list, t.items))}
                                         for t in transactions))
    rules = []
    if transactions:
        frequent = mine_frequent_itemsets(transactions, p.mining.min_support, p.mining.max_itemset_size)
        rules = generate_rules(frequent, p.mining.min_confidence)
    provenance = {
        "protocol_hash": ctx.protocol_hash,
        "rng_seed": p.rng_seed,
        "tool_version": webreview.__version__,
        "inputs": {EVIDENCE_JSON: sha256_file(ctx.path(EVIDENCE_JSON)), THEMES: sha256_file(ctx.path(THEMES))},
        "transactions": len(transactions),
        "manifest": MANIFEST,
    }
    model = assemble_model(themes, rules, provenance)
    write_json(ctx.path(MODEL), model.to_dict())
    atomic_write_text(ctx.path(RULES_CSV), model.rules_csv())
    atomic_write_text(ctx.path(RULES_DOT), model.rules_dot())
    return [TRANSACTIONS, MODEL, RULES_CSV, RULES_DOT]


def _stage_report(ctx: Context) -> list[str]:
    from webreview.pipeline.report import emit_report

    return emit_report(ctx.workdir, ctx.protocol)


STAGE_FUNCS: dict[str, Callable[[Context], list[str]]] = {
    "search": _stage_search,
    "fetch": _stage_fetch,
    "select": _stage_select,
    "extract": _stage_extract,
    "synthesize": _stage_synthesize,
    "mine": _stage_mine,
    "report": _stage_report,
}


# ---------------------------------------------------------------------------
# Orchestration


def _hash_tree(root: Path) -> str:
    parts = []
    for f in sorted(p for p in root.rglob("*") if p.is_file()):
        parts.append(f"{f.relative_to(root).as_posix()}:{sha256_file(f)}")
    return sha256_text("\n".join(parts))


def _external_inputs(ctx: Context, stage: str) -> dict[str, str]:
    p = ctx.protocol
    out = {}
    if stage == "search":
        for eng in p.search.engines:
            if eng.kind == "fixture":
                f = p.resolve_path(eng.path)
                out[f"fixture:{eng.engine_id}"] = sha256_file(f) if f.exists() else "missing"
    if stage == "fetch" and ctx.offline and p.fetch.snapshot_dir:
        snap = p.resolve_path(p.fetch.snapshot_dir)
        out["snapshot"] = _hash_tree(snap) if snap.exists() else "missing"
    return out


def _upstream_outputs(ctx: Context, manifest: RunManifest, stage: str) -> dict[str, str]:
    hashes = {}
    for dep in REQUIRES[stage]:
        entry = manifest.last_success(dep)
        if entry is None:
            raise DependencyMissing(f"{stage}: requires stage: {dep}")
        for rel, recorded in sorted(entry["outputs"].items()):
            f = ctx.path(rel)
            if not f.exists():
                raise DependencyMissing(f"{stage}: requires stage: {dep} (missing {rel})")
            current = sha256_file(f)
            if current != recorded and not ctx.force:
                raise HashMismatch(f"{stage}: {rel} from stage {dep} changed since it was produced; "
                                   f"rerun {dep} or pass --force")
            hashes[rel] = current
    return hashes


def _outputs_intact(ctx: Context, entry: dict) -> bool:
    return all(ctx.path(rel).exists() and sha256_file(ctx.path(rel)) == h for rel, h in entry["outputs"].items())


def run_stage(name: str, protocol_path: str | Path, workdir: str | Path, *, force: bool = False,
              offline: bool = False, protocol: ReviewProtocol | None = None) -> dict:
    """Run one stage under the workdir lock and append a manifest entry.

    Returns the manifest entry. Raises a :class:`PipelineError` subclass on
    missing or changed upstream artifacts and on stage failures.
    """
    if name not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {name!r}; expected one of {STAGES}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    if protocol is None:
        protocol = load_protocol(protocol_path)
    lock = FileLock(str(workdir / ".lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise WorkdirBusy(f"another pipeline run holds {workdir / '.lock'}") from None
    try:
        return _run_locked(Context(protocol, workdir, offline, force), name)
    finally:
        lock.release()


def _run_locked(ctx: Context, name: str) -> dict:
    manifest = RunManifest(ctx.path(MANIFEST))
    write_json(ctx.path(PROTOCOL_JSON), protocol_to_dict(ctx.protocol))

    upstream = _upstream_outputs(ctx, manifest, name)
    inputs = {
        "protocol": ctx.protocol_hash,
        "params": sha256_text(canonical_json({"offline": ctx.offline})),
        **_external_inputs(ctx, name),
        **upstream,
    }
    entry = {
        "stage": name,
        "protocol_hash": ctx.protocol_hash,
        "rng_seed": ctx.protocol.rng_seed,
        "tool_version": webreview.__version__,
        "inputs": inputs,
        "offline": ctx.offline,
        "forced": ctx.force,
        "started_at": utc_now(),
    }
    previous = manifest.last_success(name)
    if not ctx.force and previous is not None and previous["inputs"] == inputs and _outputs_intact(ctx, previous):
        entry.update(status="up-to-date", outputs=previous["outputs"], finished_at=utc_now(),
                     message="inputs unchanged; stage skipped")
        manifest.append(entry)
        logger.info("%s: up-to-date", name)
        return entry

    t0 = time.perf_counter()
    try:
        outputs = STAGE_FUNCS[name](ctx)
    except PipelineError:
        raise
    except Exception as exc:
        entry.update(status="failed", outputs={}, finished_at=utc_now(), message=f"{type(exc).__name__}: {exc}")
        manifest.append(entry)
        raise StageFailure(f"{name}: {type(exc).__name__}: {exc}") from exc
    entry.update(
        status="completed",
        outputs={rel: sha256_file(ctx.path(rel)) for rel in sorted(outputs)},
        finished_at=utc_now(),
        seconds=round(time.perf_counter() - t0, 3),
    )
    if name == "select":
        entry["message"] = "selection by attribute coverage precedes topic fitting; no model-informed re-screening"
    manifest.append(entry)
    logger.info("%s: completed in %.2fs", name, entry["seconds"])
    return entry


def run_all(protocol_path: str | Path, workdir: str | Path, *, force: bool = False,
            offline: bool = False) -> list[dict]:
    protocol = load_protocol(protocol_path)
    return [run_stage(s, protocol_path, workdir, force=force, offline=offline, protocol=protocol)
            for s in STAGES]


def read_stage_json(workdir: str | Path, rel: str):
    return read_json(Path(workdir) / rel)


def read_stage_jsonl(workdir: str | Path, rel: str):
    return read_jsonl(Path(workdir) / rel)
