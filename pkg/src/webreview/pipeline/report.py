"""Review report: walks the data from page text to codes, themes and rules."""

from __future__ import annotations

from pathlib import Path

from webreview._io import atomic_write_text, read_json, read_jsonl, write_json
from webreview.extraction.evidence import EvidenceTable
from webreview.harvest.store import CorpusStore
from webreview.pipeline import stages as S
from webreview.rules import KnowledgeModel


def _md_cell(text) -> str:
    return str(text).replace("|", "\\|").replace("\n", " ")


def _fmt(x) -> str:
    return f"{x:.3f}" if isinstance(x, float) else str(x)


def funnel_counts(workdir: Path) -> dict:
    search = read_jsonl(workdir / S.SEARCH_RESULTS)
    corpus = CorpusStore(workdir / S.CORPUS_DIR).read_all()
    selected = read_json(workdir / S.SELECTED)
    table = EvidenceTable.from_dict(read_json(workdir / S.EVIDENCE_JSON))
    return {
        "retrieved": len(search),
        "fetched_ok": sum(d.ok for d in corpus),
        "selected": len(selected),
        "evidence_rows": len(table.rows),
        "segmented_rows": sum(1 for r in table.rows if any(table.cell(r, a) for a in table.columns)),
    }


def build_report(workdir: str | Path, protocol) -> dict:
    """Collect everything the report shows into one plain dict (the JSON rendition)."""
    workdir = Path(workdir)
    table = EvidenceTable.from_dict(read_json(workdir / S.EVIDENCE_JSON))
    model = KnowledgeModel.from_dict(read_json(workdir / S.MODEL))
    qgs = read_json(workdir / S.QGS_SCORES)
    fetch_summary = read_json(workdir / S.FETCH_SUMMARY)["summary"]
    docs = {d.doc_id: d for d in CorpusStore(workdir / S.CORPUS_DIR)}
    segments = table.segment_index()

    columns = []
    for col in model.themes.columns:
        themes = []
        for t in col.themes:
            members = [segments[r] for r in t.member_refs if r in segments]
            themes.append({
                "label": t.label,
                "origin": t.origin,
                "members": len(t.member_refs),
                "top_terms": list(t.top_terms),
                "examples": [m.text for m in members[:2]],
            })
        columns.append({
            "attribute": col.attribute,
            "mode": protocol.attribute(col.attribute).mode,
            "segments": len(table.column(col.attribute)),
            "themes": themes,
            "unassigned": len(col.unassigned),
            "diagnostics": col.diagnostics,
        })

    provenance = []
    for t in model.themes.themes():
        refs = []
        for doc_id, idx in t.member_refs:
            seg = segments.get((doc_id, idx))
            refs.append({
                "doc_id": doc_id,
                "sentence_index": idx,
                "url": docs[doc_id].url if doc_id in docs else None,
                "code": seg.code if seg else None,
                "excerpt": seg.text if seg else None,
            })
        provenance.append({"attribute": t.attribute, "theme": t.label, "members": refs})

    all_segments = table.segments()
    return {
        "title": protocol.title,
        "protocol": {
            "research_questions": list(protocol.research_questions),
            "query_strings": list(protocol.search.query_strings),
            "engines": [e.engine_id for e in protocol.search.engines],
            "schema": [{"name": a.name, "mode": a.mode, "seed_terms": list(a.seed_terms),
                        "categories": [c.label for c in a.categories]} for a in protocol.schema],
            "inclusion": {
                "min_token_count": protocol.inclusion.min_token_count,
                "relevance_threshold": protocol.inclusion.relevance_threshold,
                "required_terms": list(protocol.inclusion.required_terms),
                "excluded_terms": list(protocol.inclusion.excluded_terms),
            },
            "mining": {"min_support": protocol.mining.min_support,
                       "min_confidence": protocol.mining.min_confidence,
                       "max_itemset_size": protocol.mining.max_itemset_size},
            "rng_seed": protocol.rng_seed,
            "protocol_hash": model.provenance.get("protocol_hash"),
        },
        "qgs": qgs,
        "funnel": funnel_counts(workdir),
        "fetch": fetch_summary,
        "data_evolution": {
            "text_segments": len(all_segments),
            "distinct_codes": len({s.code for s in all_segments}),
            "themes": len(model.themes.themes()),
            "rules": len(model.rules),
        },
        "columns": columns,
        "rules": [r.to_dict() for r in model.rules],
        "provenance": provenance,
    }


def render_markdown(rep: dict) -> str:
    out = [f"# Review report: {rep['title'] or 'untitled review'}", ""]

    p = rep["protocol"]
    out += ["## Protocol summary", ""]
    if p["research_questions"]:
        out += [f"{i}. {q}" for i, q in enumerate(p["research_questions"], 1)] + [""]
    out += [
        f"- Query strings: {', '.join(repr(q) for q in p['query_strings'])}",
        f"- Engines: {', '.join(p['engines'])}",
        f"- Inclusion: relevance >= {p['inclusion']['relevance_threshold']}, "
        f"tokens >= {p['inclusion']['min_token_count']}",
        f"- Rule mining: min_support {p['mining']['min_support']}, "
        f"min_confidence {p['mining']['min_confidence']}, max itemset size {p['mining']['max_itemset_size']}",
        f"- RNG seed: {p['rng_seed']}; protocol hash `{p['protocol_hash']}`",
        "",
        "| attribute | mode | seed terms | categories |",
        "|---|---|---|---|",
    ]
    out += [f"| {a['name']} | {a['mode']} | {_md_cell(', '.join(a['seed_terms']))} | "
            f"{_md_cell(', '.join(a['categories']))} |" for a in p["schema"]]
    out.append("")

    q = rep["qgs"]
    out += ["## Search performance against the QGS", ""]
    if q.get("overall") is None:
        out += [q.get("note", "No QGS configured."), ""]
    else:
        out += [f"Precision is QGS-precision (QGS hits / retrieved); QGS size {q['qgs_size']}.", "",
                "| query | retrieved | QGS hits | sensitivity | QGS-precision |", "|---|---|---|---|---|"]
        rows = list(q["per_query"].items()) + [("(all queries, merged)", q["overall"])]
        for name, s in rows:
            out.append(f"| {_md_cell(name)} | {s['retrieved_count']} | {s['qgs_hit_count']} | "
                       f"{_fmt(s['sensitivity'])} | {_fmt(s['precision'])} |")
        out.append("")

    f = rep["funnel"]
    out += ["## Screening funnel", "",
            f"retrieved {f['retrieved']} -> fetched {f['fetched_ok']} -> selected {f['selected']} "
            f"-> segmented {f['segmented_rows']}", ""]
    if rep["fetch"]["by_status"]:
        out += ["Fetch outcomes other than ok: " + ", ".join(
            f"{k} x{v}" for k, v in rep["fetch"]["by_status"].items()), ""]

    e = rep["data_evolution"]
    out += ["## Data evolution", "",
            f"- Text: {e['text_segments']} sentence segments",
            f"- Codes: {e['distinct_codes']} distinct code labels",
            f"- Themes: {e['themes']}",
            f"- Model: {e['rules']} association rules", ""]

    out += ["## Themes by column", ""]
    for col in rep["columns"]:
        out += [f"### {col['attribute']} ({col['mode']}, {col['segments']} segments, "
                f"{col['unassigned']} unassigned)", ""]
        if not col["themes"]:
            out += ["No themes.", ""]
            continue
        out += ["| theme | members | top terms | example |", "|---|---|---|---|"]
        for t in col["themes"]:
            example = t["examples"][0] if t["examples"] else ""
            out.append(f"| {_md_cell(t['label'])} | {t['members']} | {_md_cell(', '.join(t['top_terms'][:5]))} "
                       f"| {_md_cell(example)} |")
        out.append("")

    out += ["## Association rules", ""]
    if not rep["rules"]:
        out += [f"No rules met thresholds (min_support {p['mining']['min_support']}, "
                f"min_confidence {p['mining']['min_confidence']}).", ""]
    else:
        out += ["| antecedent | consequent | support | confidence | lift |", "|---|---|---|---|---|"]
        for r in rep["rules"]:
            side = lambda items: ", ".join(f"{a}:{t}" for a, t in items)  # noqa: E731
            out.append(f"| {_md_cell(side(r['antecedent']))} | {_md_cell(side(r['consequent']))} | "
                       f"{_fmt(r['support'])} | {_fmt(r['confidence'])} | {_fmt(r['lift'])} |")
        out.append("")

    out += ["## Appendix: theme provenance", ""]
    for theme in rep["provenance"]:
        out += [f"### {theme['attribute']}: {theme['theme']}", ""]
        for m in theme["members"]:
            out.append(f"- `{m['doc_id']}`#{m['sentence_index']} ({m['url']}) [{m['code']}]: "
                       f"\"{_md_cell(m['excerpt'])}\"")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def emit_report(workdir: str | Path, protocol) -> list[str]:
    """Write ``report/report.md`` and ``report/report.json``; returns their relative paths."""
    workdir = Path(workdir)
    if not (workdir / S.MODEL).exists():
        raise FileNotFoundError(f"{workdir / S.MODEL} missing; run the mine stage first")
    rep = build_report(workdir, protocol)
    write_json(workdir / S.REPORT_JSON, rep)
    atomic_write_text(workdir / S.REPORT_MD, render_markdown(rep))
    return [S.REPORT_MD, S.REPORT_JSON]


def verify_traceability(workdir: str | Path) -> dict:
    """Resolve every theme member and every rule item down to verbatim corpus text.

    Returns counts of resolved and unresolved references plus a list of the
    failures.
    """
    workdir = Path(workdir)
    table = EvidenceTable.from_dict(read_json(workdir / S.EVIDENCE_JSON))
    model = KnowledgeModel.from_dict(read_json(workdir / S.MODEL))
    docs = {d.doc_id: d for d in CorpusStore(workdir / S.CORPUS_DIR)}
    segments = table.segment_index()

    failures = []
    total = 0

    def resolves(ref) -> bool:
        seg = segments.get(tuple(ref))
        doc = docs.get(ref[0])
        return seg is not None and doc is not None and doc.ok and bool(seg.text) and seg.text in doc.plain_text

    for theme in model.themes.themes():
        total += 1
        bad = [r for r in theme.member_refs if not resolves(r)]
        if not theme.member_refs or bad:
            failures.append({"theme": f"{theme.attribute}:{theme.label}", "unresolved": [list(r) for r in bad]})
    for rule in model.rules:
        for item in rule.antecedent + rule.consequent:
            total += 1
            theme = model.themes.find(*item)
            if theme is None or not theme.member_refs or not all(resolves(r) for r in theme.member_refs):
                failures.append({"rule_item": f"{item[0]}:{item[1]}"})
    return {"total": total, "resolved": total - len(failures), "failures": failures}
