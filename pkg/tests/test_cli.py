"""Tests for configuration parsing, file emission, and the CLI."""

import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from curveswarm import cli
from curveswarm.config import (
    ConfigError,
    dump_config,
    load_config,
    parse_target,
)
from curveswarm.curves import make_curve
from curveswarm.finder import FinderConfig, multistart
from curveswarm.output import (
    format_samples_csv,
    write_metrics_csv,
    write_snapshot_svg,
    write_solution_file,
    write_trajectory_csv,
)
from curveswarm.sim import MissionConfig, run_mission


def run_cli(args):
    return cli.main(list(args))


# -- config parsing -----------------------------------------------------------


def test_config_minimal_and_defaults():
    cfg = load_config("[curve]\nname = deltoid\n")
    assert cfg.curve_name == "deltoid"
    assert cfg.finder.n == 4
    assert cfg.controller_overrides == {}
    mission = cfg.mission_config()
    assert mission.n == 4
    assert mission.dt == 0.01


def test_config_missing_curve_name_named():
    with pytest.raises(ConfigError, match="curve.name"):
        load_config("")
    cfg = load_config("", {"curve": "ellipse"})
    assert cfg.curve_name == "ellipse"


def test_config_unknown_keys_are_named():
    with pytest.raises(ConfigError, match="warp_factor"):
        load_config("[curve]\nname = circle\n[finder]\nwarp_factor = 2\n")
    with pytest.raises(ConfigError, match="k_psi"):
        load_config("[curve]\nname = circle\n[controller]\nk_psi = 1\n")
    with pytest.raises(ConfigError, match="speed"):
        load_config("[curve]\nname = circle\n[sim]\nspeed = 4\n")
    with pytest.raises(ConfigError, match="extras"):
        load_config("[extras]\nx = 1\n")


def test_config_type_errors_are_named():
    with pytest.raises(ConfigError, match="finder.n"):
        load_config("[curve]\nname = circle\n[finder]\nn = four\n")
    with pytest.raises(ConfigError, match="target"):
        parse_target("1,2,3")


def test_config_flags_override_file():
    text = "[curve]\nname = circle\n[sim]\nseed = 1\nn = 3\n"
    cfg = load_config(text, {"curve": "deltoid", "seed": 9, "n": 4})
    assert cfg.curve_name == "deltoid"
    assert cfg.sim["seed"] == 9
    assert cfg.finder.n == 4
    # the finder inherits the mission seed unless set explicitly
    assert cfg.finder.seed == 9


def test_config_controller_overrides_validated():
    with pytest.raises(ConfigError, match="d_safe"):
        load_config(
            "[curve]\nname = circle\n[controller]\nd_safe = 2.0\nd_ao = 1.0\n"
        )


def test_config_dump_round_trip():
    text = (
        "[curve]\nname = lissajous-32\n"
        "[finder]\nsquare_mode = true\n"
        "[controller]\nv_ref = 0.4\n"
        "[sim]\nn = 4\nseed = 5\ntarget = 0.5, 0.5\nsnapshot_times = 10, 50\n"
    )
    cfg = load_config(text)
    dumped = dump_config(cfg)
    cfg2 = load_config(dumped)
    assert dump_config(cfg2) == dumped
    assert cfg2.finder == cfg.finder
    assert cfg2.sim == cfg.sim
    assert cfg2.controller_overrides == cfg.controller_overrides


# -- output files -------------------------------------------------------------


@pytest.fixture(scope="module")
def short_mission():
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=6.0)
    metrics, log = run_mission(config)
    return curve, config, metrics, log


def test_trajectory_csv_contract(tmp_path, short_mission):
    _curve, config, _metrics, log = short_mission
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(path, log)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,agent,x,y,psi,v,z,vz,sigma,alpha,accel,turn_rate,lift_accel"
    n_records = int(round(config.horizon / config.dt)) + 1
    assert len(lines) == 1 + n_records * config.n
    first = lines[1].split(",")
    assert len(first) == 13
    assert float(first[0]) == 0.0
    assert first[1] == "0"
    # rows grouped by time, agents cycling fastest
    assert lines[2].split(",")[1] == "1"


def test_metrics_csv_contract_and_determinism(tmp_path, short_mission):
    curve, config, metrics, _log = short_mission
    p1 = tmp_path / "m1.csv"
    p2 = tmp_path / "m2.csv"
    write_metrics_csv(p1, metrics)
    metrics2, _ = run_mission(config)
    write_metrics_csv(p2, metrics2)
    b1 = p1.read_bytes()
    assert b1 == p2.read_bytes()
    lines = b1.decode().splitlines()
    assert lines[0] == "t,min_distance,mean_adherence,sigma_0,sigma_1,sigma_2,sigma_3"
    assert len(lines) == 1 + metrics.times.shape[0]
    # values reparse losslessly
    row = lines[1].split(",")
    assert float(row[1]) == float(metrics.min_distance[0])


def test_solution_file_contents(tmp_path):
    curve = make_curve("deltoid")
    best, runs = multistart(curve, FinderConfig(n=4, c_target=(0.0, 0.0)), return_all=True)
    path = tmp_path / "solution.txt"
    write_solution_file(path, best, runs)
    text = path.read_text()
    assert "[solution]" in text and "[starts]" in text
    assert f"n = 4" in text
    assert "feasible = True" in text
    assert text.count("vertex_") == 4
    # one line per start after the header comment
    starts = [
        ln
        for ln in text.split("[starts]", 1)[1].splitlines()
        if ln and not ln.startswith("#")
    ]
    assert len(starts) == len(runs)


def test_snapshot_svg_well_formed(tmp_path, short_mission):
    curve, _config, metrics, log = short_mission
    path = tmp_path / "snap.svg"
    write_snapshot_svg(path, curve, log, log.data.shape[0] - 1, metrics.assignment)
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    tags = [child.tag.split("}")[-1] for child in root.iter()]
    assert tags.count("circle") == 4
    assert "polyline" in tags and "path" in tags


def test_samples_csv_closure():
    curve = make_curve("rose-3")
    text = format_samples_csv(curve, 100)
    lines = text.splitlines()
    assert lines[0] == "s,x,y,tangent_x,tangent_y,curvature"
    assert len(lines) == 101
    first = np.array([float(v) for v in lines[1].split(",")])
    last = np.array([float(v) for v in lines[-1].split(",")])
    assert np.hypot(first[1] - last[1], first[2] - last[2]) <= 1e-9 * curve.scale
    kappa = np.array([float(ln.split(",")[5]) for ln in lines[1:]])
    assert np.all(np.isfinite(kappa)) and np.all(kappa >= 0.0)


# -- CLI ----------------------------------------------------------------------


def test_cli_find_deltoid_square(tmp_path, capsys):
    out = tmp_path / "find"
    code = run_cli(
        ["find", "--curve", "deltoid", "--n", "4", "--target", "0,0", "--out", str(out)]
    )
    assert code == 0
    text = (out / "solution.txt").read_text()
    residual = float(
        [ln for ln in text.splitlines() if ln.startswith("residual_norm")][0]
        .split("=")[1]
    )
    assert residual <= 1e-8
    assert (out / "cost_trace.csv").read_text().startswith("start,init_kind,iteration,cost")


def test_cli_simulate_writes_artifacts(tmp_path):
    out = tmp_path / "sim"
    config = tmp_path / "mission.ini"
    config.write_text(
        "[curve]\nname = deltoid\n[sim]\nn = 4\nseed = 0\nhorizon = 4.0\n"
        "snapshot_times = 0.0, 4.0\ntarget = 0, 0\n"
    )
    code = run_cli(["simulate", str(config), "--out", str(out)])
    assert code == 0
    names = sorted(os.listdir(out))
    assert "metrics.csv" in names and "trajectory.csv" in names
    assert sum(1 for n in names if n.endswith(".svg")) == 2
    rows = (out / "metrics.csv").read_text().splitlines()
    assert len(rows) == 1 + int(round(4.0 / 0.01)) + 1


def test_cli_simulate_dt_densifies_grid(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    base = ["simulate", "--curve", "circle", "--n", "1", "--seed", "0", "--horizon", "2.0"]
    assert run_cli(base + ["--dt", "0.01", "--out", str(out1)]) == 0
    assert run_cli(base + ["--dt", "0.005", "--out", str(out2)]) == 0
    rows1 = len((out1 / "metrics.csv").read_text().splitlines())
    rows2 = len((out2 / "metrics.csv").read_text().splitlines())
    assert rows2 - 1 == 2 * (rows1 - 1) - 1


def test_cli_exit_2_on_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[sim]\nn = 4\n")
    assert run_cli(["simulate", str(bad)]) == 2
    assert "curve.name" in capsys.readouterr().err
    worse = tmp_path / "worse.ini"
    worse.write_text("[curve]\nname = circle\n[finder]\nwarp = 1\n")
    assert run_cli(["find", str(worse)]) == 2
    assert "warp" in capsys.readouterr().err
    assert run_cli(["simulate", "--curve", "klein-bottle"]) == 2
    assert run_cli(["curves", "sample", "klein-bottle"]) == 2


def test_cli_exit_3_when_no_feasible_formation(monkeypatch, tmp_path):
    best, runs = multistart(
        make_curve("circle"), FinderConfig(n=3), return_all=True
    )
    starved = best.__class__(**{**best.__dict__, "feasible": False})

    def fake_multistart(curve, config, return_all=False):
        return (starved, runs) if return_all else starved

    monkeypatch.setattr(cli, "multistart", fake_multistart)
    code = run_cli(["find", "--curve", "circle", "--n", "3", "--out", str(tmp_path)])
    assert code == 3


def test_cli_exit_4_on_collision(monkeypatch, tmp_path):
    curve = make_curve("deltoid")
    config = MissionConfig(curve=curve, n=4, seed=0, horizon=4.0)
    metrics, log = run_mission(config)
    hit = metrics.__class__(**{**metrics.__dict__, "collision": True})
    monkeypatch.setattr(cli, "run_mission", lambda mission: (hit, log))
    code = run_cli(
        ["simulate", "--curve", "deltoid", "--n", "4", "--out", str(tmp_path)]
    )
    assert code == 4


def test_cli_curves_list_and_sample(capsys):
    assert run_cli(["curves", "list"]) == 0
    names = capsys.readouterr().out.splitlines()
    assert "deltoid" in names and "lissajous-32" in names
    assert run_cli(["curves", "sample", "rose", "--n", "100"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 101


def test_cli_dump_config_round_trip(tmp_path, capsys):
    code = run_cli(
        ["simulate", "--curve", "deltoid", "--n", "4", "--seed", "7", "--dump-config"]
    )
    assert code == 0
    dumped = capsys.readouterr().out
    path = tmp_path / "dump.ini"
    path.write_text(dumped)
    assert run_cli(["simulate", str(path), "--dump-config"]) == 0
    assert capsys.readouterr().out == dumped


def test_cli_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "curveswarm.cli", "curves", "list"],
        capture_output=True,
        text=True,
        env={**os.environ, "CURVESWARM_NUMBA": "0"},
    )
    assert proc.returncode == 0
    assert "deltoid" in proc.stdout
