import json
import os
import subprocess

import pytest

CLI = os.environ.get("TCF_CLI")

pytestmark = pytest.mark.skipif(not CLI, reason="TCF_CLI is not set")


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)


def test_generate_then_register(tmp_path):
    corr = tmp_path / "scene.txt"
    gt = tmp_path / "gt.txt"
    res = run("generate", "--n", 500, "--outlier-ratio", 0.8, "--seed", 4, "--out", corr, "--out-pose", gt)
    assert res.returncode == 0, res.stderr
    rows = [line for line in corr.read_text().splitlines() if not line.startswith("#")]
    assert len(rows) == 500

    est = tmp_path / "est.txt"
    res = run("register", corr, "--tau", 0.3, "--gt-pose", gt, "--out-pose", est)
    assert res.returncode == 0, res.stderr
    report = json.loads(res.stdout)
    assert report["metrics"]["success"] is True
    assert len(est.read_text().split()) == 16


def test_usage_error_exit_code():
    assert run("register").returncode == 2


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3 4 5 x\n")
    res = run("register", bad)
    assert res.returncode == 3
    assert "line 1" in res.stderr


def test_missing_input_is_a_usage_error(tmp_path):
    assert run("register", tmp_path / "missing.txt").returncode == 2


def test_unwritable_output_exit_code(tmp_path):
    res = run("generate", "--n", 10, "--out", tmp_path / "no" / "such" / "dir.txt")
    assert res.returncode == 5


def test_registration_failure_exit_code(tmp_path):
    small = tmp_path / "small.txt"
    small.write_text("0 0 0 0 0 0\n1 0 0 1 0 0\n")
    assert run("register", small).returncode == 4
