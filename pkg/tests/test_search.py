from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES, MINIMAL_YAML, QGS_PROTOCOL
from webreview.harvest.search import (
    EngineTransportError,
    FixtureAdapter,
    JsonRestAdapter,
    MalformedResponseError,
    MissingCredentialError,
    SearchResultRecord,
    build_adapters,
    evaluate_search_string,
    lookup_path,
    merge_results,
    read_search_results,
    run_search,
    write_search_results,
)
from webreview.protocol import EngineConfig, load_protocol, parse_protocol


def rec(url, rank=1, engine="e", query="q"):
    return SearchResultRecord(url, "", "", rank, engine, query)


def test_qgs_demo_scores():
    p = load_protocol(QGS_PROTOCOL)
    score = evaluate_search_string(run_search(p, offline=True), p.qgs)
    assert (score.sensitivity, score.precision) == (0.5, 0.5)
    assert (score.retrieved_count, score.qgs_hit_count, score.qgs_size) == (4, 2, 4)


def test_empty_qgs_is_an_error():
    with pytest.raises(ValueError):
        evaluate_search_string([rec("https://a/")], [])


def test_nothing_retrieved_gives_zero_precision():
    s = evaluate_search_string([], ["https://a.example/"])
    assert s.sensitivity == 0 and s.precision == 0


@given(st.sets(st.integers(0, 15), max_size=10), st.sets(st.integers(0, 15), min_size=1, max_size=10))
def test_scores_match_set_arithmetic(retrieved, qgs):
    urls = lambda ids: [f"https://h{i}.example/" for i in ids]  # noqa: E731
    s = evaluate_search_string([rec(u) for u in urls(retrieved)], urls(qgs))
    hits = len(retrieved & qgs)
    assert Fraction(s.sensitivity).limit_denominator(100) == Fraction(hits, len(qgs))
    if retrieved:
        assert Fraction(s.precision).limit_denominator(100) == Fraction(hits, len(retrieved))
    assert 0 <= s.sensitivity <= 1 and 0 <= s.precision <= 1


def test_merge_keeps_lowest_rank_and_sorts():
    merged = merge_results([rec("https://b/", 3, "x"), rec("https://a/", 2), rec("https://b/", 1, "y"),
                            rec("https://b/", 1, "z")])
    assert [(r.url, r.rank, r.engine_id) for r in merged] == [("https://a/", 2, "e"), ("https://b/", 1, "y")]


def test_bundled_fixture_deduplicates_across_engines():
    p = load_protocol(FIXTURES / "cloud_api" / "protocol.yaml")
    records = run_search(p, offline=True)
    urls = [r.url for r in records]
    assert len(urls) == len(set(urls)) == 22
    assert urls == sorted(urls)
    assert "https://forum.cloudops.example/t/storage-api-report-1" in urls


def test_fixture_query_mapping(tmp_path):
    f = tmp_path / "r.json"
    f.write_text(json.dumps({"one": [{"url": "https://a/"}], "two": [{"url": "https://b/", "title": "B"}]}))
    a = FixtureAdapter("f", f)
    assert a.search("two", 10) == [{"url": "https://b/", "title": "B", "snippet": ""}]
    assert a.search("three", 10) == []


@pytest.mark.parametrize("content, reason", [
    ("{not json", "invalid JSON"),
    ('"just a string"', "expected a JSON array"),
    ("[1, 2]", "result is not an object"),
    ('[{"title": "no url"}]', "missing url"),
])
def test_malformed_fixture(tmp_path, content, reason):
    f = tmp_path / "r.json"
    f.write_text(content)
    with pytest.raises(MalformedResponseError) as info:
        FixtureAdapter("broken", f).search("q", 10)
    assert info.value.engine_id == "broken"
    assert reason in str(info.value)


def test_relative_result_url_is_malformed(tmp_path):
    (tmp_path / "results.json").write_text('[{"url": "/relative/only"}]')
    p = parse_protocol(MINIMAL_YAML, source_dir=tmp_path)
    with pytest.raises(MalformedResponseError):
        run_search(p, offline=True)


def test_lookup_path():
    body = {"data": {"hits": [{"link": "u0"}, {"link": "u1"}]}}
    assert lookup_path(body, "data.hits.1.link") == "u1"
    assert lookup_path(body, "") is body
    with pytest.raises(KeyError):
        lookup_path(body, "data.missing")


class FakeResponse:
    def __init__(self, status, body):
        self.status_code = status
        self._body = body
        self.text = body if isinstance(body, str) else json.dumps(body)

    def json(self):
        if isinstance(self._body, str):
            raise ValueError("not json")
        return self._body


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.urls = []

    def get(self, url, timeout=None):
        self.urls.append(url)
        r = self.responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


REST = EngineConfig("web", "json-rest", url_template="https://api.example/s?q={query}&start={start}&n={count}&key={credential}",
                    credential_env="SEARCH_KEY", results_path="data.items", url_path="link", title_path="name",
                    page_size=2)


def _page(*links):
    return FakeResponse(200, {"data": {"items": [{"link": u, "name": u[-1]} for u in links]}})


def test_rest_adapter_paginates_and_maps_fields():
    session = FakeSession([_page("https://a/1", "https://a/2"), _page("https://a/3")])
    a = JsonRestAdapter(REST, session, environ={"SEARCH_KEY": "k y"}, sleep=lambda s: None)
    out = a.search("cloud api", 5)
    assert [r["url"] for r in out] == ["https://a/1", "https://a/2", "https://a/3"]
    assert out[0]["title"] == "1"
    assert session.urls[0] == "https://api.example/s?q=cloud+api&start=1&n=2&key=k+y"
    assert session.urls[1] == "https://api.example/s?q=cloud+api&start=3&n=2&key=k+y"


def test_rest_adapter_missing_credential():
    a = JsonRestAdapter(REST, FakeSession([]), environ={})
    with pytest.raises(MissingCredentialError):
        a.search("q", 5)


def test_rest_adapter_retries_then_succeeds():
    sleeps = []
    session = FakeSession([ConnectionError("reset"), FakeResponse(503, "busy"), FakeResponse(429, "slow"),
                           _page("https://a/1")])
    a = JsonRestAdapter(REST, session, environ={"SEARCH_KEY": "k"}, max_retries=3, backoff=0.5, sleep=sleeps.append)
    assert len(a.search("q", 5)) == 1
    assert sleeps == [0.5, 1.0, 2.0]


def test_rest_adapter_gives_up():
    session = FakeSession([FakeResponse(500, "x")] * 3)
    a = JsonRestAdapter(REST, session, environ={"SEARCH_KEY": "k"}, max_retries=2, sleep=lambda s: None)
    with pytest.raises(EngineTransportError):
        a.search("q", 5)


@pytest.mark.parametrize("response", [FakeResponse(200, "<html>not json</html>"),
                                      FakeResponse(200, {"data": {"items": "oops"}}),
                                      FakeResponse(200, {"data": {"items": [{"name": "no link"}]}})])
def test_rest_adapter_malformed(response):
    a = JsonRestAdapter(REST, FakeSession([response]), environ={"SEARCH_KEY": "k"})
    with pytest.raises(MalformedResponseError):
        a.search("q", 5)


def test_offline_skips_rest_engines(tmp_path):
    p = parse_protocol(MINIMAL_YAML, source_dir=tmp_path)
    assert len(build_adapters(p, offline=True)) == 1


def test_results_round_trip(tmp_path):
    records = [rec("https://a/", 1), rec("https://b/", 2, "x", "other")]
    write_search_results(tmp_path / "r.jsonl", records)
    assert read_search_results(tmp_path / "r.jsonl") == records
