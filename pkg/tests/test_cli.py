import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dyad.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, ConfigError, main, parse_config_text

FORWARD = """
[run]
command = {cmd}
[model]
variant = MHDForward
lambda = 2
theta = 2.5
[construction]
rho = 11.313708498984761
"""


def run(tmp_path, text, name="out", *extra):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text, encoding="utf-8")
    out = tmp_path / name
    code = main(["--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_defaults_materialized():
    cfg = parse_config_text(FORWARD.format(cmd="construct"))
    assert cfg["numerics"]["j_max"] == 12 and cfg["construction"]["d0"] == 1.0
    assert cfg["io"]["formats"] == ["csv", "json"]


def test_missing_lambda(tmp_path, capsys):
    code, _ = run(tmp_path, "[run]\ncommand = simulate\n[model]\ntheta = 2\n")
    assert code == EXIT_CONFIG
    assert "lambda" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,key",
    [
        ("[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\nnn = 3\n", "numerics.nn"),
        ("[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[extra]\nx = 1\n", "extra"),
        ("[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\ndt = -1\n", "numerics.dt"),
        ("[run]\ncommand = simulate\n[model]\nlambda = 0.5\ntheta = 2\n", "model.lambda"),
        ("[run]\ncommand = fly\n[model]\nlambda = 2\n", "run.command"),
        ("[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\nN = many\n", "numerics.N"),
        ("[run]\ncommand = sweep\n[model]\nlambda = 2\n[sweep]\ncommand = verify\nx_key = model.bogus\n", "sweep.x_key"),
    ],
)
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as e:
        parse_config_text(text)
    assert e.value.key == key


def test_comments_and_unreadable_file(tmp_path):
    cfg = parse_config_text("# header\n[run]\ncommand = simulate  # inline\n[model]\nlambda = 2\ntheta = 2\n")
    assert cfg["run"]["command"] == "simulate"
    assert main(["--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_simulate_zero_is_exact_zero(tmp_path):
    text = "[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2.5\n[numerics]\nN = 6\ndt = 1e-3\nt_end = 0.1\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_OK
    rows = read_csv(out / "trajectory.csv")
    assert len(rows) == 101 * 7
    assert all(float(r["a"]) == 0.0 and float(r["b"]) == 0.0 for r in rows)
    keys = [(float(r["t"]), int(r["j"])) for r in rows]
    assert keys == sorted(keys)
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["numerics"]["grid_M"] == 4096
    assert set(man["outputs"]) == {"trajectory.csv", "report.json"}


def test_simulate_standard_budget(tmp_path):
    text = "[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\nN = 8\ndt = 1e-4\nt_end = 0.2\n[data]\ninitial = standard\nforcing = standard\n"
    code, out = run(tmp_path, text)
    rep = json.loads((out / "report.json").read_text())
    assert code == EXIT_OK and rep["budget_relative"] <= 1e-6


def test_formats_filter(tmp_path):
    text = "[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\nN = 2\ndt = 0.01\nt_end = 0.1\n[io]\nformats = json\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_OK
    assert not (out / "trajectory.csv").exists() and (out / "report.json").exists()


def test_construct_and_verify(tmp_path):
    code, out = run(tmp_path, FORWARD.format(cmd="construct"), "c")
    assert code == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["rho"] == pytest.approx(2**3.5, rel=1e-15)
    code, out = run(tmp_path, FORWARD.format(cmd="verify") + "[numerics]\nresidual_points = 2000\n", "v", "--workers", "2")
    rep = json.loads((out / "report.json").read_text())
    assert code == EXIT_OK
    assert rep["separation"] > 1e-3 and all(rep["pass"].values())
    assert rep["thresholds"]["residual"] == 1e-9


def test_verification_failure_exit_1(tmp_path):
    # fractional construction at lambda = 2: forcing sums decay too slowly for the pinned window
    text = "[run]\ncommand = verify\n[model]\nvariant = MHDFractional\nlambda = 2\nalpha = 0.3\nbeta = 0.4\n[numerics]\nresidual_points = 1000\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_VERIFY
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"]["residual"] and not rep["pass"]["forcing_ratio"]


def test_numeric_failure_exit_3(tmp_path):
    code, out = run(tmp_path, FORWARD.format(cmd="construct") + "P = 0\n")
    assert code == EXIT_NUMERIC
    diag = json.loads((out / "diagnostic.json").read_text())
    assert diag["error"] == "DegenerateKernel"
    assert (out / "manifest.json").exists() and not (out / "report.json").exists()


def test_blow_up_exit_3(tmp_path):
    text = "[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2.5\nnu = 0\nmu = 0\n[numerics]\nN = 3\ndt = 0.01\nt_end = 50\n[data]\ninitial = standard\nforcing = standard\namplitude = 1e200\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_NUMERIC
    assert json.loads((out / "diagnostic.json").read_text())["error"] == "BlowUpError"


def test_byte_identical_reruns(tmp_path):
    text = FORWARD.format(cmd="construct") + "[numerics]\nsamples = 201\n"
    _, o1 = run(tmp_path, text, "r1")
    _, o2 = run(tmp_path, text, "r2")
    for name in ("trajectory.csv", "report.json", "manifest.json"):
        assert (o1 / name).read_bytes() == (o2 / name).read_bytes()


def test_dyad_out_default(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\ncommand = simulate\n[model]\nlambda = 2\ntheta = 2\n[numerics]\nN = 2\ndt = 0.01\nt_end = 0.1\n")
    monkeypatch.setenv("DYAD_OUT", str(tmp_path / "env"))
    assert main(["--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "env" / "report.json").exists()


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\ncommand = simulate\n")
    p = subprocess.run([sys.executable, "-m", "dyad", "--config", str(cfg), "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert p.returncode == EXIT_CONFIG and "lambda" in p.stderr


def test_empty_sweep(tmp_path):
    text = "[run]\ncommand = sweep\n[model]\nlambda = 2\ntheta = 2.5\n[sweep]\ncommand = verify\nx_key = model.theta\nx_values =\n"
    code, out = run(tmp_path, text)
    assert code == EXIT_OK
    assert (out / "summary.csv").read_text() == "i,j,x,y,status,exit_code,separation,note\n"


def test_sweep_skips_inadmissible(tmp_path):
    text = (
        "[run]\ncommand = sweep\n[model]\nvariant = MHDFractional\nlambda = 8\n"
        "[numerics]\nresidual_points = 500\n"
        "[sweep]\ncommand = construct\nx_key = model.alpha\nx_values = 0.3, 0.45\ny_key = model.beta\ny_values = 0.4, 0.2\n"
    )
    code, out = run(tmp_path, text)
    rows = read_csv(out / "summary.csv")
    status = {(r["x"], r["y"]): r["status"] for r in rows}
    assert status == {("0.29999999999999999", "0.40000000000000002"): "ok", ("0.29999999999999999", "0.20000000000000001"): "skipped",
                      ("0.45000000000000001", "0.40000000000000002"): "skipped", ("0.45000000000000001", "0.20000000000000001"): "skipped"}
    assert code == EXIT_OK
    assert (out / "point_0_0" / "manifest.json").exists() and not (out / "point_1_0").exists()


def test_sweep_records_failures_and_continues(tmp_path):
    text = FORWARD.format(cmd="sweep") + "[sweep]\ncommand = construct\nx_key = construction.P\nx_values = 0, 300\n"
    text += "y_key = construction.rho\ny_values = 0.5, 11.313708498984761\n"
    code, out = run(tmp_path, text)
    rows = read_csv(out / "summary.csv")
    # P = 0 degenerates, P = 300 misses the calibration, rho = 0.5 is rejected as config
    assert [r["status"] for r in rows] == ["config-error", "numeric-failure"] * 2
    assert [r["exit_code"] for r in rows] == ["2", "3"] * 2
    assert code == EXIT_VERIFY


@pytest.mark.slow
def test_theta_sweep_separation(tmp_path):
    text = (
        "[run]\ncommand = sweep\n[model]\nlambda = 2\ntheta = 2.5\n"
        "[numerics]\nresidual_points = 1000\n"
        "[sweep]\ncommand = demo-nonunique\nx_key = model.theta\nx_values = 2.1, 2.3, 2.5\n"
    )
    code, out = run(tmp_path, text, "out", "--workers", "1")
    rows = read_csv(out / "summary.csv")
    assert len(rows) == 3
    assert all(float(r["separation"]) > 0 for r in rows), rows
    man = json.loads((out / "manifest.json").read_text())
    assert "summary.csv" in man["outputs"]
    assert np.isfinite([float(r["separation"]) for r in rows]).all()
