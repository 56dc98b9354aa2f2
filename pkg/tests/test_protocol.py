from __future__ import annotations

import string

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CLOUD_PROTOCOL, MINIMAL_YAML
from webreview.protocol import (
    Category,
    EngineConfig,
    ProtocolSemanticError,
    ProtocolSyntaxError,
    ReviewProtocol,
    RuleMiningConfig,
    SchemaAttribute,
    SearchStrategy,
    SynthesisConfig,
    dump_protocol,
    load_protocol,
    parse_protocol,
    validate_protocol,
)


def _with(base: str, **patch) -> str:
    data = yaml.safe_load(base)
    for key, value in patch.items():
        data[key] = value
    return yaml.safe_dump(data)


def _diag_fields(exc: ProtocolSemanticError) -> list[str]:
    return [d.field for d in exc.diagnostics]


def test_minimal_protocol_gets_defaults():
    p = parse_protocol(MINIMAL_YAML)
    assert p.rng_seed == 0
    assert p.inclusion.min_token_count == 50
    assert p.inclusion.relevance_threshold == 0.1
    assert p.mining == RuleMiningConfig(0.1, 0.6, 4)
    assert [s.attribute for s in p.synthesis] == ["issue", "api"]
    assert p.synthesis_for("issue") == SynthesisConfig("issue", 2, 8, 2, 0.05)
    assert p.topic_count == 4
    assert p.attribute("api").categories[1] == Category("queue", ("queue", "message"))


def test_bundled_protocol_loads_and_resolves_paths():
    p = load_protocol(CLOUD_PROTOCOL)
    assert p.attribute_names == ["api", "issue", "condition"]
    assert p.resolve_path(p.search.engines[0].path).exists()
    assert p.resolve_path(p.fetch.snapshot_dir).is_dir()


def test_seed_terms_lowercased_and_qgs_normalized():
    text = _with(MINIMAL_YAML, qgs=["HTTPS://Example.COM:443/a?utm_source=x#top"])
    text = text.replace("outage", "Outage")
    p = parse_protocol(text)
    assert p.qgs == ("https://example.com/a",)
    assert p.attribute("issue").seed_terms[0] == "outage"


def test_malformed_yaml_is_a_syntax_error():
    with pytest.raises(ProtocolSyntaxError):
        parse_protocol("search: [unclosed\n  - x: :")


@pytest.mark.parametrize("patch, field", [
    ({"mining": {"min_support": 1.5}}, "mining.min_support"),
    ({"mining": {"min_support": 0.0}}, "mining.min_support"),
    ({"mining": {"min_confidence": -0.1}}, "mining.min_confidence"),
    ({"mining": {"max_itemset_size": 1}}, "mining.max_itemset_size"),
    ({"inclusion": {"relevance_threshold": 2.0}}, "inclusion.relevance_threshold"),
    ({"qgs": ["not a url"]}, "qgs[0]"),
    ({"rng_seed": -3}, "rng_seed"),
    ({"text": {"max_df_ratio": 0.0}}, "text.max_df_ratio"),
    ({"topics": {"k": 1}}, "topics.k"),
    ({"synthesis": [{"attribute": "nope"}]}, "synthesis[0].attribute"),
    ({"synthesis": [{"attribute": "issue", "k_min": 5, "k_max": 3}]}, "synthesis[0].k_min"),
    ({"colour": "blue"}, "colour"),
])
def test_semantic_errors_name_the_field(patch, field):
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(_with(MINIMAL_YAML, **patch))
    assert field in _diag_fields(info.value)


def test_out_of_range_message_text():
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(_with(MINIMAL_YAML, mining={"min_support": 1.5}))
    assert "mining.min_support out of range" in str(info.value)


def test_duplicate_attribute_reported_once():
    data = yaml.safe_load(MINIMAL_YAML)
    data["schema"].append({"name": "issue", "seed_terms": ["crash"]})
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(yaml.safe_dump(data))
    messages = [d.message for d in info.value.diagnostics]
    assert messages.count("duplicate attribute name 'issue'") == 1


def test_categorical_needs_categories():
    data = yaml.safe_load(MINIMAL_YAML)
    del data["schema"][1]["categories"]
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(yaml.safe_dump(data))
    assert "schema[1].categories" in _diag_fields(info.value)


def test_open_mode_rejects_categories():
    data = yaml.safe_load(MINIMAL_YAML)
    data["schema"][0]["categories"] = [{"label": "x", "seed_terms": ["y"]}]
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(yaml.safe_dump(data))
    assert "schema[0].categories" in _diag_fields(info.value)


def test_json_rest_engine_requires_template_and_url_path():
    data = yaml.safe_load(MINIMAL_YAML)
    data["search"]["engines"] = [{"engine_id": "web", "kind": "json-rest", "url_template": "https://x/?q=1"}]
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(yaml.safe_dump(data))
    fields = _diag_fields(info.value)
    assert "search.engines[0].url_template" in fields
    assert "search.engines[0].url_path" in fields


def test_missing_required_sections():
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol("title: nothing else\n")
    fields = _diag_fields(info.value)
    assert "search" in fields and "schema" in fields


def test_every_violation_is_reported():
    data = yaml.safe_load(MINIMAL_YAML)
    data["mining"] = {"min_support": 3, "min_confidence": 3}
    data["qgs"] = ["ftp://x"]
    with pytest.raises(ProtocolSemanticError) as info:
        parse_protocol(yaml.safe_dump(data))
    assert {"mining.min_support", "mining.min_confidence", "qgs[0]"} <= set(_diag_fields(info.value))


def test_bundled_protocol_round_trips():
    p = load_protocol(CLOUD_PROTOCOL)
    assert parse_protocol(dump_protocol(p), source_dir=p.source_dir) == p


_ident = st.text(string.ascii_lowercase, min_size=1, max_size=6).map(lambda s: "a" + s)
_term = st.text(string.ascii_lowercase, min_size=2, max_size=8)
_unit = st.floats(min_value=0.01, max_value=1.0, allow_nan=False)


@st.composite
def protocols(draw) -> ReviewProtocol:
    names = draw(st.lists(_ident, min_size=1, max_size=4, unique=True))
    schema = []
    for name in names:
        if draw(st.booleans()):
            labels = draw(st.lists(_ident, min_size=2, max_size=3, unique=True))
            cats = tuple(Category(lab, tuple(draw(st.lists(_term, min_size=1, max_size=3)))) for lab in labels)
            schema.append(SchemaAttribute(name, tuple(draw(st.lists(_term, min_size=1, max_size=4))),
                                          "categorical", cats))
        else:
            schema.append(SchemaAttribute(name, tuple(draw(st.lists(_term, min_size=1, max_size=4)))))
    search = SearchStrategy(tuple(draw(st.lists(_term, min_size=1, max_size=3))),
                            (EngineConfig("eng", "fixture", path="r.json"),),
                            draw(st.integers(1, 100)))
    synthesis = tuple(SynthesisConfig(n, k_min=2, k_max=draw(st.integers(2, 9))) for n in names)
    return ReviewProtocol(
        search=search, schema=tuple(schema), synthesis=synthesis,
        title=draw(st.text(string.ascii_letters + " ", max_size=20)),
        mining=RuleMiningConfig(draw(_unit), draw(_unit), draw(st.integers(2, 5))),
        rng_seed=draw(st.integers(0, 2**32)),
    )


@settings(max_examples=60, deadline=None)
@given(protocols())
def test_dump_parse_round_trip(p):
    assert validate_protocol(p) == []
    assert parse_protocol(dump_protocol(p)) == p
