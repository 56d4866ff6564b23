import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from jmcover.cli import COMMANDS, build_parser, main

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def fixed_width(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("cmd", sorted(COMMANDS))
def test_help_golden(cmd, capsys):
    code, out, _ = run(capsys, cmd, "--help")
    assert code == 0
    path = GOLDEN / f"help_{cmd}.txt"
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(out)
    assert out == path.read_text()


@pytest.mark.parametrize("cmd", sorted(COMMANDS))
def test_help_lists_every_flag(cmd):
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    text = sub.format_help()
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
        if action.option_strings and action.dest not in ("help", "out", "config", "format", "unrestricted", "plot",
                                                          "png", "mode", "model", "theorem"):
            assert action.help and "(" in action.help, action.dest  # units or kind in parentheses


def test_constants_d3(capsys):
    code, out, err = run(capsys, "constants", "--d", "3", "--k", "1")
    assert code == 0
    row = json.loads(out)
    assert row["c_d"] == pytest.approx(3 * math.pi**2 / 32, rel=1e-12)
    assert row["c_dk"] == pytest.approx(2**-4 * math.pi ** (5 / 3), rel=1e-12)
    assert set(row) == {"d", "k", "omega_d", "c_d", "c_dk", "c_prime_d"}
    assert err.count("\n") == 1


def test_cover_time_reproducible(capsys):
    a = run(capsys, "cover-time", "--window", "square", "--rho", "1000", "--seed", "7")
    b = run(capsys, "cover-time", "--window", "square", "--rho", "1000", "--seed", "7")
    assert a[0] == b[0] == 0
    assert json.loads(a[1])["T"] == json.loads(b[1])["T"]


def test_limit_cdf_monotone_csv(capsys):
    code, out, _ = run(capsys, "limit-cdf", "--theorem", "jm-polygon", "--area", "1", "--perimeter", "4",
                       "--beta-grid", "-5:15:0.1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "beta,F"
    vals = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    assert len(vals) == 201 and np.all(np.diff(vals[:, 1]) >= 0)


def test_limit_cdf_single_beta_json(capsys):
    code, out, _ = run(capsys, "limit-cdf", "--theorem", "jm-unrestricted", "--beta", "0", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["F"][0] == pytest.approx(math.exp(-((4 * math.pi) ** (-1 / 3))))


def test_out_file_and_summary(tmp_path, capsys):
    p = tmp_path / "c.json"
    code, out, err = run(capsys, "constants", "--out", str(p))
    assert code == 0 and json.loads(p.read_text())["d"] == 2
    assert out.count("\n") == 1 and err == ""


@pytest.mark.parametrize(
    "argv",
    [
        ["cover-time", "--rho", "-5"],
        ["cover-time", "--rho", "abc"],
        ["constants", "--d", "0"],
        ["threshold", "--law", "gamma:2"],
        ["tessellate", "--resolution", "4"],
        ["limit-cdf", "--theorem", "0322b"],
        ["cover-time", "--window", "hexagon"],
        ["cover-time", "--oracle", "grid:-1"],
        ["cover-time", "--bogus"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_domain_error_exit_1(capsys):
    code, _, err = run(capsys, "cover-time", "--window", "cube", "--rho", "100")
    assert code == 1 and "error" in err


def test_scaling_small_L_domain_error(capsys):
    code, _, _ = run(capsys, "scaling-test", "--L", "0.5", "--reps", "1")
    assert code == 1


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rho": 300, "seed": 3}))
    _, a, _ = run(capsys, "cover-time", "--config", str(cfg))
    _, b, _ = run(capsys, "cover-time", "--rho", "300", "--seed", "3")
    assert json.loads(a)["T"] == json.loads(b)["T"]
    _, c, _ = run(capsys, "cover-time", "--config", str(cfg), "--seed", "4")
    assert json.loads(c)["seed"] == 4 and json.loads(c)["rho"] == 300


@pytest.mark.parametrize("doc", [{"rho": -1}, {"bogus": 1}, [1, 2]])
def test_bad_config(tmp_path, capsys, doc):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    code, _, _ = run(capsys, "cover-time", "--config", str(cfg))
    assert code == 2


def test_missing_config(capsys):
    assert run(capsys, "cover-time", "--config", "/nonexistent/cfg.json")[0] == 2


def test_threshold_with_oracle(capsys):
    code, out, _ = run(capsys, "threshold", "--n", "200", "--law", "uniform:1", "--k", "2", "--seed", "1",
                       "--oracle", "grid:0.01")
    doc = json.loads(out)
    assert code == 0 and doc["oracle"]["consistent"] and doc["R"] > 0


def test_cover_time_with_oracle_disc(capsys):
    code, out, _ = run(capsys, "cover-time", "--window", "disc", "--rho", "500", "--oracle", "grid:0.01")
    doc = json.loads(out)
    assert code == 0 and doc["oracle"]["consistent"]


def test_window_json(capsys):
    poly = json.dumps({"kind": "polygon", "vertices": [[0, 0], [2, 0], [0, 1]]})
    code, out, _ = run(capsys, "cover-time", "--window", poly, "--rho", "200")
    assert code == 0 and json.loads(out)["T"] > 0


def test_simulate_jm_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate-jm", "--rho", "100", "--seed", "2", "--out", str(a))[0] == 0
    assert run(capsys, "simulate-jm", "--rho", "100", "--seed", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert Path(str(a) + ".json").exists()


def test_simulate_spbm_stdout(capsys):
    code, out, _ = run(capsys, "simulate-spbm", "--n", "50", "--law", "exp:2", "--unrestricted")
    assert code == 0 and out.startswith("x,y,radius\n")


def test_experiment_and_plot(tmp_path, capsys):
    out, png = tmp_path / "e.csv", tmp_path / "e.png"
    code, text, _ = run(capsys, "experiment", "--scales", "50,100", "--reps", "5", "--seed", "1",
                        "--out", str(out), "--plot", str(png))
    assert code == 0 and "ks[jm-polygon]" in text
    assert png.read_bytes()[:4] == b"\x89PNG"
    from jmcover.montecarlo import load

    summaries, cfg = load(out)
    assert len(summaries) == 2 and cfg.replications == 5


def test_experiment_stdout_deterministic(capsys):
    a = run(capsys, "experiment", "--scales", "60", "--reps", "3", "--seed", "9")
    b = run(capsys, "experiment", "--scales", "60", "--reps", "3", "--seed", "9")
    assert a[1] == b[1] and a[1].startswith("scale,stream,raw_value,standardized_value\n")


def test_scaling_and_equivalence(capsys):
    code, out, _ = run(capsys, "scaling-test", "--L", "2", "--reps", "20", "--seed", "1")
    assert code == 0 and {"ks", "critical", "reject"} <= set(json.loads(out))
    code, out, _ = run(capsys, "equivalence-test", "--rho", "200", "--t", "0.5", "--reps", "20")
    doc = json.loads(out)
    assert code == 0 and 0 <= doc["p_jm"] <= 1


def test_chiu_check_negative_levels(capsys):
    code, out, _ = run(capsys, "chiu-check", "--u", "-2,0", "--L", "1e3,1e6", "--d", "2")
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "d,u,L,gap,F" and len(rows) == 5


def test_tessellate(tmp_path, capsys):
    ppm, png = tmp_path / "cells.ppm", tmp_path / "cells.png"
    code, out, _ = run(capsys, "tessellate", "--resolution", "64", "--out", str(ppm), "--png", str(png))
    assert code == 0 and "last covered point" in out
    assert ppm.read_bytes()[:2] == b"P6" and ppm.with_suffix(".svg").exists()
    assert png.read_bytes()[:4] == b"\x89PNG"


def test_tessellate_spbm(tmp_path, capsys):
    ppm = tmp_path / "w.ppm"
    code, _, _ = run(capsys, "tessellate", "--mode", "spbm", "--window", "square", "--n", "40",
                     "--resolution", "32", "--out", str(ppm))
    assert code == 0 and ppm.exists()
