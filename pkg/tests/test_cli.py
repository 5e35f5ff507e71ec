import csv
import json
import os
import subprocess
import sys

import pytest

from aeplatoon import __version__
from aeplatoon.cli import (EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NO_CONVERGENCE, EXIT_OK,
                           EXIT_SAFETY, dispatch)
from conftest import FIXTURES


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def fixture_text(name):
    return (FIXTURES / f"{name}.cfg").read_text()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = dispatch(["simulate", str(FIXTURES / "scenario1.cfg"), "--out", str(out)])
    return code, out / "simulate_scenario1"


def test_simulate_outputs(simulated):
    code, run = simulated
    assert code == EXIT_OK
    names = sorted(p.name for p in run.iterdir())
    assert names == ["config_snapshot.cfg", "manifest.json", "summary.json", "trace.csv"]
    rows = read_csv(run / "trace.csv")
    assert {"t_s", "x0_m", "v2_mps", "Q1_C", "d1_0_m", "K2_1", "branch1_0"} <= set(rows[0])
    assert rows[0]["t_s"] == "0.0" and rows[1]["t_s"] == "1.0"
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate" and manifest["version"] == __version__
    assert manifest["wall_clock_s"] >= 0
    summary = json.loads((run / "summary.json").read_text())
    assert min(summary["min_separation_m"]) >= 1000.0 - 0.1


def test_snapshot_rerun_reproduces_trace(simulated, tmp_path):
    _, run = simulated
    snap = write(tmp_path, "scenario1.cfg", (run / "config_snapshot.cfg").read_text())
    assert dispatch(["simulate", str(snap), "--out", str(tmp_path / "o")]) == EXIT_OK
    again = tmp_path / "o" / "simulate_scenario1" / "trace.csv"
    assert again.read_bytes() == (run / "trace.csv").read_bytes()


def test_rerun_replaces_directory_atomically(tmp_path):
    args = ["solve", str(FIXTURES / "shooting_table4.cfg"), "--out", str(tmp_path)]
    assert dispatch(args) == EXIT_OK
    stale = tmp_path / "solve_shooting_table4" / "stale.txt"
    stale.write_text("x")
    assert dispatch(args) == EXIT_OK
    assert not stale.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["solve_shooting_table4"]


def test_nothing_written_outside_out(tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "target"
    assert dispatch(["solve", str(FIXTURES / "shooting_table4.cfg"), "--out", str(out)]) == 0
    assert list(work.iterdir()) == []
    assert [p.name for p in out.iterdir()] == ["solve_shooting_table4"]


def test_bad_d_min_exits_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.cfg", fixture_text("scenario1").replace("d_min_km = 1",
                                                                        "d_min_km = 0"))
    assert dispatch(["simulate", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "d_min" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_file_exits_config(tmp_path):
    assert dispatch(["simulate", str(tmp_path / "none.cfg")]) == EXIT_CONFIG


def test_missing_section_exits_config(tmp_path):
    assert dispatch(["shoot", str(FIXTURES / "scenario1.cfg"),
                     "--out", str(tmp_path)]) == EXIT_CONFIG


def test_initial_violation_exits_safety(tmp_path, capsys):
    cfg = write(tmp_path, "close.cfg", fixture_text("scenario1").replace("x0_km = 10, 6, 4",
                                                                          "x0_km = 10, 9.5, 4"))
    assert dispatch(["simulate", str(cfg), "--out", str(tmp_path)]) == EXIT_SAFETY
    assert "pair (1,0)" in capsys.readouterr().err


def test_infeasible_envelope_exits_two(tmp_path, capsys):
    # the pair's g-root sits below a 90 km/h stall speed
    cfg = write(tmp_path, "stall.cfg", fixture_text("shooting_table4")
                .replace("v_stall_kmh = 54", "v_stall_kmh = 90"))
    assert dispatch(["solve", str(cfg), "--out", str(tmp_path)]) == EXIT_INFEASIBLE
    assert "stall" in capsys.readouterr().err


def test_non_convergence_exits_four_and_keeps_partial(tmp_path):
    cfg = write(tmp_path, "once.cfg", fixture_text("shooting_table4")
                .replace("max_iterations = 30", "max_iterations = 1"))
    assert dispatch(["shoot", str(cfg), "--out", str(tmp_path)]) == EXIT_NO_CONVERGENCE
    run = tmp_path / "shoot_once"
    assert "error" in json.loads((run / "manifest.json").read_text())
    assert (run / "history_0.csv").exists()


def test_shoot_outputs(tmp_path):
    assert dispatch(["shoot", str(FIXTURES / "shooting_table4.cfg"),
                     "--out", str(tmp_path)]) == EXIT_OK
    runs = json.loads((tmp_path / "shoot_shooting_table4" / "summary.json").read_text())["runs"]
    assert len(runs) == 4 and all(r["converged"] for r in runs)
    assert all(r["max_rel_gap"] < 0.01 for r in runs)


def test_dt_override(tmp_path):
    assert dispatch(["simulate", str(FIXTURES / "scenario1.cfg"), "--dt", "2",
                     "--out", str(tmp_path)]) == EXIT_OK
    run = tmp_path / "simulate_scenario1"
    rows = read_csv(run / "trace.csv")
    assert rows[1]["t_s"] == "2.0"
    assert "dt_s = 2.0" in (run / "config_snapshot.cfg").read_text()
    assert dispatch(["simulate", str(FIXTURES / "scenario1.cfg"), "--dt", "-1",
                     "--out", str(tmp_path)]) == EXIT_CONFIG


def test_sweep_range(tmp_path):
    assert dispatch(["sweep", str(FIXTURES / "wind_sweep.cfg"), "--range=-10:10:5",
                     "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "sweep_wind_sweep" / "sweep.csv")
    assert len(rows) == 27 * 5
    summary = json.loads((tmp_path / "sweep_wind_sweep" / "summary.json").read_text())
    assert all(summary["v_strictly_decreasing"])


def test_sweep_alpha(tmp_path):
    assert dispatch(["sweep", str(FIXTURES / "wind_sweep.cfg"), "--param", "alpha",
                     "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "sweep_wind_sweep" / "sweep.csv")
    assert {r["param"] for r in rows} == {"alpha"}


def test_stability_and_metrics(tmp_path):
    assert dispatch(["stability", str(FIXTURES / "disturbance.cfg"),
                     "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "stability_disturbance" / "summary.json").read_text())
    assert s["string_stable"] and s["attenuates"]
    assert dispatch(["metrics", str(FIXTURES / "metrics_study.cfg"),
                     "--out", str(tmp_path)]) == EXIT_OK
    run = tmp_path / "metrics_metrics_study"
    assert (run / "metrics_scenario1.csv").exists() and (run / "metrics_scenario2.csv").exists()


def test_usage_error_exits_config(capsys):
    assert dispatch(["simulate"]) == EXIT_CONFIG
    assert dispatch(["bogus", "x.cfg"]) == EXIT_CONFIG


def test_stability_needs_disturbance(tmp_path):
    assert dispatch(["stability", str(FIXTURES / "scenario1.cfg"),
                     "--out", str(tmp_path)]) == EXIT_CONFIG


def test_strict_flag(tmp_path):
    cfg = write(tmp_path, "loose.cfg", fixture_text("scenario1").replace("d_dot_max_mps = 20\n",
                                                                          ""))
    assert dispatch(["simulate", str(cfg), "--strict", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert dispatch(["simulate", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    manifest = json.loads((tmp_path / "simulate_loose" / "manifest.json").read_text())
    assert any("d_dot_max" in w for w in manifest["warnings"])


def test_console_entry_points():
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "aeplatoon", "--version"], capture_output=True,
                       text=True, env=env)
    assert r.returncode == 0 and __version__ in r.stdout
    r = subprocess.run([sys.executable, "-m", "aeplatoon", "--help"], capture_output=True,
                       text=True, env=env)
    assert r.returncode == 0
    for name in ("simulate", "stability", "sweep", "metrics", "solve", "shoot"):
        assert name in r.stdout
