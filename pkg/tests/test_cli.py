import json
import math
import os

import pytest

from escnav import ScenarioFormatError, load_bundled_scenario, load_scenario
from escnav.cli import main
from escnav.scenario_io import bundled_scenario_names, parse_scenario

BOWL_SCENARIO = {
    "version": 1,
    "world": {"center": [0.0, 0.0], "radius": 3.0, "obstacles": []},
    "source": {"q": [1.0, 1.0], "schedule": [{"at": [0.0, 0.0]}]},
    "esc": {
        "omega": 40.0,
        "alpha": 0.07,
        "gain": 10.0,
        "hpf_cutoff": 20.0,
        "sample_rate": 400.0,
        "v_max": 0.8,
    },
    "nav": {"mode": "fixed", "k": 1},
    "start": [0.0, 0.15],
    "duration": 4.0,
    "convergence_radius": 0.21,
    "convergence_hold": 1.0,
}


def write_scenario(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def patched(data, **updates):
    merged = json.loads(json.dumps(data))
    merged.update(updates)
    return merged


# -- scenario files -------------------------------------------------------------


def test_bundled_names():
    assert bundled_scenario_names() == ["discovery", "particle_moving", "particle_static"]


def test_bundled_static_matches_reference_setup():
    sc = load_bundled_scenario("particle_static")
    assert sc.esc.omega == 40.0
    assert sc.esc.alpha == 0.07
    assert sc.esc.gain == 10.0
    assert sc.esc.hpf_cutoff == 20.0
    assert sc.esc.sample_rate == 400.0
    assert sc.nav_mode.k == 6
    assert (sc.start.x, sc.start.y) == (0.0, 2.5)
    centers = [(ob.center.x, ob.center.y, ob.radius) for ob in sc.world.obstacles]
    assert centers == [
        (-1.0, 0.0, 0.25),
        (-0.2, 1.2, 0.25),
        (1.0, 0.7, 0.25),
        (1.0, -1.0, 0.25),
        (-0.5, -1.0, 0.25),
    ]
    assert sc.world.workspace_radius == 3.0
    assert sc.source.position(0.0).x == 0.0


def test_bundled_moving_source_schedule():
    sc = load_bundled_scenario("particle_moving")
    assert sc.source.speed == 0.2
    end = sc.source.final_position
    assert (end.x, end.y) == (-0.47, 0.38)
    assert sc.source.position(10.0) == type(end)(0.0, 0.0)


def test_unknown_field_rejected(tmp_path):
    path = write_scenario(tmp_path, patched(BOWL_SCENARIO, typo_field=1))
    with pytest.raises(ScenarioFormatError, match="typo_field"):
        load_scenario(path)


def test_wrong_version_rejected(tmp_path):
    path = write_scenario(tmp_path, patched(BOWL_SCENARIO, version=2))
    with pytest.raises(ScenarioFormatError, match="version"):
        load_scenario(path)


def test_bad_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "version": 1,\n  "world": }\n')
    with pytest.raises(ScenarioFormatError, match="line 3"):
        load_scenario(path)


def test_bad_obstacle_triple_reported_with_path():
    data = patched(BOWL_SCENARIO)
    data["world"] = {"center": [0.0, 0.0], "radius": 3.0, "obstacles": [[1.0, 2.0]]}
    with pytest.raises(ScenarioFormatError, match=r"obstacles\[0\]"):
        parse_scenario(data)


def test_detection_radius_accepts_inf_and_defaults():
    data = patched(BOWL_SCENARIO, detection_radius="inf")
    assert math.isinf(parse_scenario(data).detection_radius)
    # default: three obstacle radii
    data = patched(BOWL_SCENARIO)
    data["world"] = {"center": [0.0, 0.0], "radius": 3.0, "obstacles": [[2.0, 0.0, 0.3]]}
    assert parse_scenario(data).detection_radius == pytest.approx(0.9)


def test_nav_mode_variants():
    fixed = parse_scenario(patched(BOWL_SCENARIO))
    assert fixed.nav_mode.kind == "fixed" and fixed.nav_mode.k == 1
    disc = parse_scenario(patched(BOWL_SCENARIO, nav={"mode": "discovery"}))
    assert disc.nav_mode.kind == "discovery"
    assert disc.nav_mode.bootstrap_scale == 0.1
    with pytest.raises(ScenarioFormatError, match="mode"):
        parse_scenario(patched(BOWL_SCENARIO, nav={"mode": "other"}))


# -- run command ------------------------------------------------------------------


def test_cmd_run_converged_exit_zero(tmp_path, capsys):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    out = tmp_path / "out"
    code = main(["run", str(scenario), "--out", str(out)])
    assert code == 0
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x,y,vx,vy,eta,phi,f0,src_x,src_y,known_count,clearance"
    assert (out / "events.csv").read_text().splitlines()[0] == "t,kind,payload"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] is True
    assert summary["collided"] is False
    assert summary["final_distance"] <= 0.21


def test_cmd_run_seventeen_digit_output(tmp_path):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    out = tmp_path / "out"
    main(["run", str(scenario), "--out", str(out)])
    row = (out / "trajectory.csv").read_text().splitlines()[2].split(",")
    t_text = row[0]
    assert t_text == format(float(t_text), ".17g")  # round-trips exactly
    assert float(row[0]) > 0.0


def test_cmd_run_nonconvergence_exit_three(tmp_path):
    data = patched(BOWL_SCENARIO, start=[0.0, 2.0], duration=2.0)
    scenario = write_scenario(tmp_path, data)
    assert main(["run", str(scenario), "--out", str(tmp_path / "o")]) == 3


def test_cmd_run_collision_exit_two(tmp_path):
    data = patched(
        BOWL_SCENARIO,
        start=[0.0, 2.5],
        duration=150.0,
        detection_radius=0.0,
        nav={"mode": "fixed", "k": 1},
    )
    data["world"] = {"center": [0.0, 0.0], "radius": 3.0, "obstacles": [[0.0, 2.0, 0.25]]}
    scenario = write_scenario(tmp_path, data)
    assert main(["run", str(scenario), "--out", str(tmp_path / "o")]) == 2


def test_cmd_run_schema_error_exit_one(tmp_path, capsys):
    scenario = write_scenario(tmp_path, patched(BOWL_SCENARIO, nonsense=True))
    assert main(["run", str(scenario), "--out", str(tmp_path / "o")]) == 1
    assert "nonsense" in capsys.readouterr().err


def test_cmd_run_missing_scenario_exit_one(tmp_path, capsys):
    assert main(["run", "no_such_scenario", "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "particle_static" in err  # lists the bundled names


# -- levelset ----------------------------------------------------------------------


def test_levelset_minimal_grid_is_corners(tmp_path):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    out = tmp_path / "grid.csv"
    assert main(["levelset", str(scenario), "--grid", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,phi"
    assert len(lines) == 5
    coords = {tuple(line.split(",")[:2]) for line in lines[1:]}
    assert coords == {("-3", "3"), ("3", "-3"), ("-3", "-3"), ("3", "3")}
    # corners sit outside the disc: potential column blank
    assert all(line.endswith(",") for line in lines[1:])
    gradient = out.with_name("grid_gradient.csv")
    assert gradient.read_text().splitlines()[0] == "x,y,gx,gy"


def test_levelset_values_bounded_and_source_cell_minimal(tmp_path):
    out = tmp_path / "grid.csv"
    assert main(["levelset", "particle_static", "--grid", "41", "--out", str(out)]) == 0
    best = None
    for line in out.read_text().splitlines()[1:]:
        x_text, y_text, phi_text = line.split(",")
        if not phi_text:
            continue
        value = float(phi_text)
        assert 0.0 <= value <= 1.0
        if best is None or value < best[0]:
            best = (value, float(x_text), float(y_text))
    # minimum lies in the cell containing the source (0, 0); spacing 0.15
    assert best is not None
    assert max(abs(best[1]), abs(best[2])) <= 6.0 / 40.0


def test_levelset_rejects_tiny_grid(tmp_path, capsys):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    assert main(["levelset", str(scenario), "--grid", "1", "--out", str(tmp_path / "g.csv")]) == 1


# -- sweep -------------------------------------------------------------------------


def test_sweep_empty_values_writes_header_only(tmp_path):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    out = tmp_path / "sweep"
    assert main(["sweep", str(scenario), "--param", "alpha", "--values", "", "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("param,value,final_time")


def test_sweep_single_value_matches_run_summary(tmp_path):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    run_out = tmp_path / "run_out"
    main(["run", str(scenario), "--out", str(run_out)])
    summary = json.loads((run_out / "summary.json").read_text())
    sweep_out = tmp_path / "sweep_out"
    assert (
        main(
            [
                "sweep",
                str(scenario),
                "--param",
                "alpha",
                "--values",
                "0.07",
                "--out",
                str(sweep_out),
            ]
        )
        == 0
    )
    header, row = (sweep_out / "sweep.csv").read_text().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert fields["param"] == "alpha"
    assert float(fields["final_distance"]) == summary["final_distance"]
    assert fields["converged"] == "true"


def test_sweep_parallel_matches_serial(tmp_path):
    scenario = write_scenario(tmp_path, patched(BOWL_SCENARIO, duration=1.0))
    args = ["sweep", str(scenario), "--param", "alpha", "--values", "0.05,0.07", "--out"]
    serial_out = tmp_path / "serial"
    parallel_out = tmp_path / "parallel"
    os.environ["ESCNAV_THREADS"] = "1"
    try:
        assert main(args + [str(serial_out)]) == 0
        os.environ["ESCNAV_THREADS"] = "2"
        assert main(args + [str(parallel_out)]) == 0
    finally:
        del os.environ["ESCNAV_THREADS"]
    assert (serial_out / "sweep.csv").read_bytes() == (parallel_out / "sweep.csv").read_bytes()


def test_sweep_unknown_param_exit_one(tmp_path, capsys):
    scenario = write_scenario(tmp_path, BOWL_SCENARIO)
    code = main(["sweep", str(scenario), "--param", "bogus", "--values", "1", "--out", str(tmp_path / "o")])
    assert code == 1


# -- validate ----------------------------------------------------------------------


def test_validate_unknown_suite_exit_one(capsys):
    assert main(["validate", "--suite", "nonexistent"]) == 1
    assert "nonexistent" in capsys.readouterr().err


def test_validate_gradients_suite_passes(tmp_path, capsys):
    assert main(["validate", "--suite", "gradients", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS gradients.source" in out
    report = json.loads((tmp_path / "gradients_report.json").read_text())
    assert report["passed"] is True
    assert all(check["passed"] for check in report["checks"])
