from __future__ import annotations

import subprocess
import sys

import pytest
from filelock import FileLock

from conftest import CLOUD_PROTOCOL, MINIMAL_YAML, protocol_copy
from webreview.cli import main
from webreview.pipeline import stages as S


def test_validate_ok(capsys):
    assert main(["validate", "--protocol", str(CLOUD_PROTOCOL)]) == 0
    assert "protocol OK" in capsys.readouterr().out


def test_validate_bad_protocol(tmp_path, capsys):
    p = tmp_path / "p.yaml"
    p.write_text(MINIMAL_YAML + "mining:\n  min_support: 0\n")
    assert main(["validate", "--protocol", str(p)]) == 1
    assert "mining.min_support out of range" in capsys.readouterr().err


def test_missing_protocol_file(tmp_path):
    assert main(["search", "--protocol", str(tmp_path / "none.yaml"), "--workdir", str(tmp_path)]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_requires_stage_message(tmp_path, capsys):
    code = main(["select", "--protocol", str(CLOUD_PROTOCOL), "--workdir", str(tmp_path), "--offline"])
    assert code == 3
    assert "requires stage: fetch" in capsys.readouterr().err


def test_busy_workdir_exit_code(tmp_path):
    with FileLock(str(tmp_path / ".lock")):
        assert main(["search", "--protocol", str(CLOUD_PROTOCOL), "--workdir", str(tmp_path), "--offline"]) == 2


def test_hash_mismatch_exit_code(tmp_path):
    proto = protocol_copy(tmp_path)
    wd = str(tmp_path / "wd")
    for stage in ("search", "fetch"):
        assert main([stage, "--protocol", str(proto), "--workdir", wd, "--offline"]) == 0
    (tmp_path / "wd" / S.CORPUS).write_text("")
    assert main(["select", "--protocol", str(proto), "--workdir", wd, "--offline"]) == 3


def test_stage_failure_exit_code(tmp_path):
    (tmp_path / "results.json").write_text("{broken")
    p = tmp_path / "p.yaml"
    p.write_text(MINIMAL_YAML)
    assert main(["search", "--protocol", str(p), "--workdir", str(tmp_path / "wd"), "--offline"]) == 2


def test_console_script_run_all_then_up_to_date(tmp_path):
    proto = protocol_copy(tmp_path)
    cmd = [sys.executable, "-m", "webreview.cli", "run-all", "--protocol", str(proto),
           "--workdir", str(tmp_path / "wd"), "--offline"]
    first = subprocess.run(cmd, capture_output=True, text=True, check=True)
    assert first.stdout.splitlines() == [f"{s}: completed" for s in S.STAGES]
    second = subprocess.run(cmd, capture_output=True, text=True, check=True)
    assert second.stdout.splitlines() == [f"{s}: up-to-date" for s in S.STAGES]
