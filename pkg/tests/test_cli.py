import csv
import json

import numpy as np
import pytest
import yaml

from bdgsoliton.cli import main

KINK = {
    "background": {"m": 1.0, "delta_minus": [[[1.0, 0.0]]], "symmetry": "nonsymmetric"},
    "solitons": [{"theta": float(np.pi / 2), "p": [[1.0, 0.0]], "x": 0.0}],
    "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 801},
    "s_scan": {"count": 7},
    "times": [-5.0, 0.0, 5.0],
}


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


@pytest.fixture
def kink_cfg(tmp_path):
    return write_config(tmp_path, KINK)


def test_validate_echoes_resolved_config(kink_cfg, capsys):
    assert main(["validate", "--config", kink_cfg]) == 0
    out = capsys.readouterr().out
    echo = yaml.safe_load(out.split("---\n", 1)[1])
    assert echo["s_scan"]["s_max"] == 5.0 and echo["tolerances"]["gap_residual"] == 1e-10


def test_construct_writes_exact_kink(kink_cfg, tmp_path):
    out = tmp_path / "c"
    assert main(["construct", "--config", kink_cfg, "--out", str(out)]) == 0
    header, data = read_csv(out / "field.csv")
    assert header[:3] == ["x", "delta_00_re", "delta_00_im"]
    assert data.shape[0] == 801
    np.testing.assert_allclose(data[:, 1], -np.tanh(data[:, 0]), atol=1e-12)
    meta = json.loads((out / "construct.json").read_text())
    assert meta["config"]["grid"]["n_points"] == 801


def test_verify_pass_and_report(kink_cfg, tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--config", kink_cfg, "--out", str(out), "--threads", "2"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["config"]["solitons"][0]["x"] == 0.0
    assert "overall: PASS" in (out / "report.txt").read_text()


def test_verify_fails_wrong_filling(tmp_path):
    cfg = write_config(tmp_path, {**KINK, "filling": {"nu": [0.7]}})
    out = tmp_path / "v"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 1
    rep = json.loads((out / "report.json").read_text())
    failed = [l["name"] for l in rep["lines"] if not l["passed"]]
    assert len(failed) == 1 and "gap" in failed[0]


def test_truncated_grid_is_numeric_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {**KINK, "grid": {"x_min": -5.0, "x_max": 5.0, "n_points": 201}})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "v")]) == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "TruncationInadequate"


@pytest.mark.parametrize("bad", [
    {"background": {"m": 1.0}, "solitons": [{"theta": 4.0, "p": [1.0], "x": 0.0}]},
    {"background": {"m": 1.0}, "grid": {"n_points": 3}},
    {"background": {"m": 1.0}, "bogus": 1, "grid": {"nope": 1}},
    {"solitons": []},
])
def test_input_errors_exit_2(tmp_path, bad, capsys):
    cfg = write_config(tmp_path, bad)
    assert main(["validate", "--config", cfg]) == 2
    assert "error" in json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_missing_config_exit_2(tmp_path):
    assert main(["construct", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == 2


def test_scatter_round_trip_and_bump(kink_cfg, tmp_path):
    c = tmp_path / "c"
    main(["construct", "--config", kink_cfg, "--out", str(c)])
    analytic = tmp_path / "a"
    sampled = tmp_path / "s"
    bumped = tmp_path / "b"
    assert main(["scatter", "--config", kink_cfg, "--out", str(analytic)]) == 0
    assert main(["scatter", "--slab", str(c / "field.csv"), "--config", kink_cfg, "--out", str(sampled)]) == 0
    assert main(["scatter", "--config", kink_cfg, "--bump", "0.01", "--out", str(bumped)]) == 0
    a = json.loads((analytic / "scatter.json").read_text())
    s = json.loads((sampled / "scatter.json").read_text())
    b = json.loads((bumped / "scatter.json").read_text())
    assert a["max_r"] <= 1e-6 and s["max_r"] <= 1e-6
    assert b["max_r"] > 1e-4
    header, rows = read_csv(analytic / "scatter.csv")
    assert header[:4] == ["s", "r_norm", "flux", "det"] and rows.shape[0] == 7


def test_evolve_with_scan(kink_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("BDGSOLITON_THREADS", "2")
    out = tmp_path / "e"
    assert main(["evolve", "--config", kink_cfg, "--out", str(out), "--scan"]) == 0
    with open(out / "manifest.csv") as fh:
        manifest = list(csv.DictReader(fh))
    assert [float(r["t"]) for r in manifest] == [-5.0, 0.0, 5.0]
    assert all(float(r["max_r"]) <= 1e-6 for r in manifest)
    assert (out / "snapshot_002.csv").exists()


def test_asymptote_table(kink_cfg, tmp_path, capsys):
    assert main(["asymptote", "--config", kink_cfg]) == 0
    out = capsys.readouterr().out
    assert "Delta-bar_1" in out and not (tmp_path / "asymptote.json").exists()
    assert main(["asymptote", "--config", kink_cfg, "--out", str(tmp_path / "a")]) == 0
    data = json.loads((tmp_path / "a" / "asymptote.json").read_text())
    np.testing.assert_allclose(data["delta_bar"][1], [[[-1.0, 0.0]]], atol=1e-12)
