from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from bodyfuse.cli import main


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "default.json"
    path.write_text(json.dumps({"trajectory": {"duration": 1.0}, "modes": ["none", "imu+uwb"]}))
    return str(path)


def test_experiment_writes_outputs(tmp_path, config, capsys):
    out = tmp_path / "out"
    assert main(["experiment", "--config", config, "--out-dir", str(out)]) == 0
    assert (out / "summary.json").exists() and (out / "series.csv").exists()
    assert capsys.readouterr().out.startswith("mode,distance_mae")


def test_experiment_single_mode_json(tmp_path, config, capsys):
    assert main(["experiment", "--config", config, "--out-dir", str(tmp_path), "--mode", "imu+uwb",
                 "--format", "json"]) == 0
    assert list(json.loads(capsys.readouterr().out)) == ["imu+uwb"]


def test_ranging_report(capsys):
    assert main(["ranging", "--drift-ppm", "40", "--trials", "1000", "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ads_twr_mean_abs_error_m"] < 1e-3
    assert report["single_sided_mean_abs_error_m"] > 1e-2


def test_ranging_transcripts(tmp_path, capsys):
    assert main(["ranging", "--trials", "10", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "transcripts.jsonl").read_text().splitlines()
    assert len(lines) == 10
    header, values = capsys.readouterr().out.splitlines()
    assert header.split(",")[0] == "distance_m"


def test_synth_then_fuse(tmp_path, config):
    assert main(["synth", "--config", config, "--out-dir", str(tmp_path)]) == 0
    truth = list(csv.reader(open(tmp_path / "truth.csv")))
    assert len(truth) == 61 and len(truth[0]) == 17
    assert main(["fuse", str(tmp_path / "measurements.jsonl"), "--config", config, "--mode", "imu+uwb",
                 "--out-dir", str(tmp_path), "--format", "json"]) == 0
    states = json.loads((tmp_path / "states.json").read_text())
    assert len(states["states"]) == 60 and len(states["states"][0]) == 108


def test_los_profile(tmp_path, config):
    assert main(["los-profile", "--config", config, "--out-dir", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "los_profile.csv")))
    assert rows[0] == ["frame", "pair", "l", "sigma_d"]
    assert len(rows) == 1 + 60 * 15


def test_shapefit_train_and_apply(tmp_path, capsys):
    assert main(["shapefit", "--n", "100", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "shapefit_report.json").read_text())
    assert report["n_train"] == 80 and report["n_test"] == 20
    from bodyfuse.body import BodyShape, measure_anthro

    a = measure_anthro(BodyShape(1.02, 1.0, 1.0, 0.99))
    anthro = tmp_path / "me.json"
    anthro.write_text(json.dumps({"height": a.height, "weight": a.weight, "distances": list(a.distances)}))
    capsys.readouterr()
    assert main(["shapefit", "--apply", str(anthro), "--estimator", str(tmp_path / "estimator.json"),
                 "--out-dir", str(tmp_path)]) == 0
    shape = json.loads(capsys.readouterr().out)["shape"]
    assert shape == pytest.approx([1.02, 1.0, 1.0, 0.99], abs=0.03)


@pytest.mark.parametrize(
    "argv",
    [
        ["experiment", "--bogus"],
        ["experiment", "--mode", "imu+gps"],
        ["nonsense"],
        [],
        ["ranging", "--format", "xml"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"modes": ["warp"]}))
    assert main(["experiment", "--config", str(bad)]) == 2
    assert main(["experiment", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["ranging", "--trials", "0"]) == 2
    assert main(["fuse", str(tmp_path / "none.jsonl")]) == 2


def test_runtime_error_exits_3(tmp_path):
    kf = tmp_path / "kf.json"
    kf.write_text("{}")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trajectory": {"kind": "file", "path": str(kf)}}))
    assert main(["synth", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bodyfuse", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("synth", "fuse", "experiment", "shapefit", "los-profile", "ranging"):
        assert cmd in proc.stdout
