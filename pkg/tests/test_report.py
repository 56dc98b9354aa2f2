from __future__ import annotations

from conftest import protocol_copy
from webreview._io import read_json
from webreview.harvest.store import CorpusStore
from webreview.pipeline import stages as S
from webreview.pipeline.report import funnel_counts, verify_traceability
from webreview.pipeline.stages import run_all, run_stage


def test_sections_present(cloud_run):
    md = (cloud_run / S.REPORT_MD).read_text()
    for heading in ("## Protocol summary", "## Search performance against the QGS", "## Screening funnel",
                    "## Data evolution", "## Themes by column", "## Association rules",
                    "## Appendix: theme provenance"):
        assert heading in md
    assert "QGS-precision" in md


def test_report_json_matches_artifacts(cloud_run):
    rep = read_json(cloud_run / S.REPORT_JSON)
    assert rep["qgs"]["overall"]["sensitivity"] == 0.75
    assert rep["funnel"] == funnel_counts(cloud_run)
    assert rep["data_evolution"]["rules"] == len(read_json(cloud_run / S.MODEL)["rules"])


def test_funnel_monotone(cloud_run):
    f = funnel_counts(cloud_run)
    seq = [f["retrieved"], f["fetched_ok"], f["selected"], f["segmented_rows"]]
    assert seq == sorted(seq, reverse=True)
    assert seq == [22, 20, 17, 17]


def test_every_provenance_excerpt_is_verbatim(cloud_run):
    rep = read_json(cloud_run / S.REPORT_JSON)
    docs = {d.doc_id: d for d in CorpusStore(cloud_run / S.CORPUS_DIR)}
    assert rep["provenance"]
    for theme in rep["provenance"]:
        assert theme["members"]
        for m in theme["members"]:
            assert m["excerpt"] in docs[m["doc_id"]].plain_text
    check = verify_traceability(cloud_run)
    assert check["failures"] == [] and check["resolved"] == check["total"] > 0


def test_regenerated_report_is_identical(tmp_path):
    proto = protocol_copy(tmp_path)
    wd = tmp_path / "wd"
    run_all(proto, wd, offline=True)
    before = (wd / S.REPORT_MD).read_bytes(), (wd / S.REPORT_JSON).read_bytes()
    run_stage("report", proto, wd, offline=True, force=True)
    assert ((wd / S.REPORT_MD).read_bytes(), (wd / S.REPORT_JSON).read_bytes()) == before


def test_empty_rule_set_line(tmp_path):
    proto = protocol_copy(tmp_path, mining={"min_support": 1.0, "min_confidence": 1.0})
    run_all(proto, tmp_path / "wd", offline=True)
    md = (tmp_path / "wd" / S.REPORT_MD).read_text()
    assert "No rules met thresholds (min_support 1.0, min_confidence 1.0)." in md
    assert "## Themes by column" in md
