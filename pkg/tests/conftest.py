from __future__ import annotations

from pathlib import Path

import pytest

import webreview

FIXTURES = Path(webreview.__file__).parent / "fixtures"
CLOUD_PROTOCOL = FIXTURES / "cloud_api" / "protocol.yaml"
QGS_PROTOCOL = FIXTURES / "qgs_demo" / "protocol.yaml"

MINIMAL_YAML = """\
search:
  query_strings: [api outage]
  engines:
    - engine_id: local
      kind: fixture
      path: results.json
schema:
  - name: issue
    seed_terms: [outage, timeout]
  - name: api
    mode: categorical
    seed_terms: [storage, queue]
    categories:
      - label: storage
        seed_terms: [storage, bucket]
      - label: queue
        seed_terms: [queue, message]
"""


@pytest.fixture
def minimal_yaml() -> str:
    return MINIMAL_YAML


@pytest.fixture(scope="session")
def cloud_run(tmp_path_factory):
    """One offline run-all over the bundled 20-page fixture, shared by the slow tests."""
    from webreview.pipeline.stages import run_all

    workdir = tmp_path_factory.mktemp("cloud_run")
    run_all(CLOUD_PROTOCOL, workdir, offline=True)
    return workdir


def protocol_copy(tmp_path, **overrides):
    """Write the bundled protocol to ``tmp_path`` with absolute fixture paths and top-level overrides."""
    import yaml

    data = yaml.safe_load(CLOUD_PROTOCOL.read_text())
    base = CLOUD_PROTOCOL.parent
    for eng in data["search"]["engines"]:
        eng["path"] = str(base / eng["path"])
    data["fetch"]["snapshot_dir"] = str(base / data["fetch"]["snapshot_dir"])
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    path = tmp_path / "protocol.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, line = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {line}")
