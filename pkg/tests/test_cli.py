import json
import os
import subprocess
import sys

import pytest

from hwg.cli import main
from hwg.scenarios import SCENARIOS

FAST = {"projector-ema": ["--draws", "200"]}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(["list"], capsys)
    names = [line.split("\t")[0] for line in out.strip().splitlines()]
    assert code == 0
    assert len(names) >= 10
    assert "mirror-equivalence" in names


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_every_scenario_exports(name, tmp_path, capsys):
    code, out, _ = run(["run", name, "--out", str(tmp_path)] + FAST.get(name, []), capsys)
    assert code == 0
    files = sorted(os.listdir(tmp_path))
    assert f"{name}.verdicts.json" in files
    assert any(f.endswith(".csv") for f in files)
    verdicts = json.loads((tmp_path / f"{name}.verdicts.json").read_text())
    assert verdicts and all(v["pass"] for v in verdicts)
    assert set(verdicts[0]) == {"check", "step", "lhs", "rhs", "pass"}


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_byte_identical_reruns(fmt, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["run", "projector-ema", "--draws", "300", "--seed", "11", "--format", fmt,
                    "--out", str(d)], capsys)[0] == 0
    assert sorted(os.listdir(a)) == sorted(os.listdir(b))
    for f in os.listdir(a):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "quadratic-contraction", "tau": 0.5, "steps": 3,
                               "format": "json", "params": {"alpha": 2.0}}))
    out = tmp_path / "o"
    code, _, _ = run(["run", "--config", str(cfg), "--steps", "4", "--out", str(out)], capsys)
    assert code == 0
    data = json.loads((out / "quadratic-contraction.json").read_text())
    rows = data["tables"]["contraction"]["rows"]
    assert len(rows) == 4
    assert rows[0][-1] == pytest.approx(1 / 2)


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"scenario": "consensus",\n  "tau": }')
    out = tmp_path / "o"
    code, _, err = run(["run", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 2
    assert "line 2" in err and "column" in err
    assert not out.exists()


@pytest.mark.parametrize("cfg", [
    {"scenario": "consensus", "tau": -1},
    {"scenario": "consensus", "seed": -3},
    {"scenario": "consensus", "seed": 2 ** 64},
    {"scenario": "no-such-thing"},
    {"scenario": "consensus", "colour": "red"},
])
def test_invalid_config_values(cfg, tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "o"
    assert run(["run", "--config", str(path), "--out", str(out)], capsys)[0] == 2
    assert not out.exists()


def test_large_seed_accepted(capsys):
    assert run(["run", "projector-ema", "--draws", "100", "--seed", str(2 ** 64 - 1)], capsys)[0] == 0


def test_verify_edi(capsys):
    code, out, _ = run(["verify", "edi", "--seed", "7"], capsys)
    assert code == 0
    assert json.loads(out.strip().splitlines()[-1])["pass"] is True


@pytest.mark.parametrize("check", ["freezing", "groenwall", "stability", "tau-refine", "spectral"])
def test_verify_passes(check, capsys):
    assert run(["verify", check], capsys)[0] == 0


def test_verify_failure_reports_json(capsys):
    code, out, _ = run(["verify", "freezing", "--strong", "--declared-L", "1e-3"], capsys)
    assert code == 1
    failed = json.loads(out)
    assert failed[0]["check"] == "freezing" and failed[0]["pass"] is False
    assert failed[0]["lhs"] > failed[0]["rhs"]


def test_precondition_failure(capsys):
    code, _, err = run(["verify", "groenwall", "--declared-L", "10"], capsys)
    assert code == 1 and "precondition" in err


def test_capacity(tmp_path, capsys):
    out = tmp_path / "o"
    code, _, err = run(["run", "grid-brute-force", "--grid-k", "100000", "--out", str(out)], capsys)
    assert code == 3 and "capacity" in err
    assert not out.exists() or not os.listdir(out)


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "hwg.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "consensus" in proc.stdout
