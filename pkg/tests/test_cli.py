import csv
import json
import shutil
from pathlib import Path

import pytest

from lqjumps.cli import main, run_experiment
from lqjumps.config import validate_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMOKE = CONFIGS / "smoke.cfg"


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _smoke_with(tmp_path, old, new):
    text = SMOKE.read_text()
    assert old in text
    return _write(tmp_path, text.replace(old, new))


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.cfg")):
        assert validate_config(path) == [], path.name


def test_empty_pq_list(tmp_path):
    problems = validate_config(_smoke_with(tmp_path, "pq_list = [[2.0, 2.0]]", "pq_list = []"))
    assert any(p.startswith("pq_list") for p in problems)


def test_exponent_out_of_range(tmp_path):
    problems = validate_config(_smoke_with(tmp_path, "pq_list = [[2.0, 2.0]]", "pq_list = [[1.0, 2.0]]"))
    assert any("exponent must lie in (1, ∞)" in p for p in problems)


def test_unknown_family(tmp_path):
    problems = validate_config(_smoke_with(tmp_path, 'generator = "constant"', 'generator = "gaussian"'))
    assert any("gaussian" in p and "known families" in p for p in problems)


def test_all_problems_listed(tmp_path):
    text = SMOKE.read_text().replace("pq_list = [[2.0, 2.0]]", "pq_list = [[0.5, 2.0]]")
    text = text.replace('generator = "constant"', 'generator = "gaussian"')
    problems = validate_config(_write(tmp_path, text))
    assert len(problems) >= 2


def test_validate_flag(tmp_path, capsys):
    assert main(["--config", str(SMOKE), "--validate"]) == 0
    bad = _smoke_with(tmp_path, 'generator = "constant"', 'generator = "gaussian"')
    assert main(["--config", str(bad), "--validate"]) == 2
    assert "gaussian" in capsys.readouterr().out


def test_smoke_run(tmp_path):
    assert main(["--config", str(SMOKE), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "ratios.csv").open()))
    assert len(rows) == 1
    assert 0.5 <= float(rows[0]["ratio"]) <= 4.0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_status"] == 0
    assert manifest["config"]["mc"]["seed"] == 20240


def test_reruns_are_byte_identical(tmp_path):
    outs = []
    for i, workers in enumerate((1, 1, 8, 8)):
        out = tmp_path / f"run{i}"
        assert run_experiment(SMOKE, out, workers=workers) == 0
        outs.append(out)
    for name in ("ratios.csv", "checks.csv"):
        ref = (outs[0] / name).read_bytes()
        assert all((o / name).read_bytes() == ref for o in outs[1:])


def test_manifest_replay(tmp_path):
    first = tmp_path / "first"
    assert run_experiment(SMOKE, first, seed=3, replicas=500) == 0
    manifest = tmp_path / "manifest.json"
    shutil.copy(first / "manifest.json", manifest)
    second = tmp_path / "second"
    assert run_experiment(manifest, second) == 0
    for name in ("ratios.csv", "checks.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_overrides_change_seed(tmp_path):
    run_experiment(SMOKE, tmp_path / "a", seed=1, replicas=200)
    run_experiment(SMOKE, tmp_path / "b", seed=2, replicas=200)
    assert (tmp_path / "a" / "ratios.csv").read_bytes() != (tmp_path / "b" / "ratios.csv").read_bytes()


def test_malformed_config_exit_2(tmp_path, capsys):
    bad = _write(tmp_path, "pq_list = [[2.0, 2.0]\n")
    assert main(["--config", str(bad), "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


def test_failed_assertion_exit_1(tmp_path, capsys):
    tight = _smoke_with(tmp_path, "ratio_high = 4.0", "ratio_high = 0.6")
    assert main(["--config", str(tight), "--out", str(tmp_path / "out")]) == 1
    assert "FAIL ratios" in capsys.readouterr().err
    assert (tmp_path / "out" / "checks.csv").exists()


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LQJUMPS_OUT", str(tmp_path / "env"))
    from lqjumps.cli import build_parser
    assert build_parser().parse_args(["--config", "x"]).out == str(tmp_path / "env")
