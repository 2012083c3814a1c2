import json
import subprocess
import sys
from pathlib import Path

import pytest

from escnav_viz import (
    FigureSpec,
    VizDataError,
    read_levelset,
    read_trajectory,
    render_scaling_figure,
    render_trajectory_figure,
)
from escnav_viz.cli import main

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_levelset(path: Path, n: int = 9) -> Path:
    lines = ["x,y,phi"]
    for j in range(n):
        for i in range(n):
            x = -1.0 + 2.0 * i / (n - 1)
            y = -1.0 + 2.0 * j / (n - 1)
            if x * x + y * y <= 1.0:
                lines.append(f"{x},{y},{min(x * x + y * y, 1.0)}")
            else:
                lines.append(f"{x},{y},")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trajectory(path: Path, shift: float = 0.0) -> Path:
    lines = ["t,x,y,vx,vy,eta,phi,f0,src_x,src_y,known_count,clearance"]
    for i in range(20):
        t = 0.1 * i
        x = 0.8 - 0.04 * i + shift
        y = 0.6 - 0.03 * i
        lines.append(f"{t},{x},{y},0,0,0.5,0.5,0.5,0,0,1,0.4")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_gradient(path: Path) -> Path:
    lines = ["x,y,gx,gy", "0.5,0.5,1.0,1.0", "-0.5,0.5,-1.0,1.0", "1.5,1.5,,"]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_scenario(path: Path) -> Path:
    doc = {
        "version": 1,
        "world": {"center": [0.0, 0.0], "radius": 1.0, "obstacles": [[0.4, -0.3, 0.1]], "inflation": 0.05},
        "source": {"q": [1.0, 1.0], "schedule": [{"at": [0.0, 0.0]}]},
        "esc": {"omega": 40.0, "alpha": 0.07, "gain": 10.0, "hpf_cutoff": 20.0},
        "nav": {"mode": "fixed", "k": 2},
        "start": [0.8, 0.6],
        "duration": 1.0,
    }
    path.write_text(json.dumps(doc))
    return path


# -- readers ------------------------------------------------------------------


def test_read_levelset_grid_shape(tmp_path):
    grid = read_levelset(write_levelset(tmp_path / "grid.csv", n=5))
    assert grid.phi.shape == (5, 5)
    assert grid.x[0] == -1.0 and grid.x[-1] == 1.0


def test_read_trajectory_columns(tmp_path):
    traj = read_trajectory(write_trajectory(tmp_path / "trajectory.csv"))
    assert traj.x.size == 20
    assert traj.src_x[-1] == 0.0


def test_malformed_csv_names_file(tmp_path):
    bad = tmp_path / "broken.csv"
    bad.write_text("t,x,y\n1,2\n")
    with pytest.raises(VizDataError, match="broken.csv"):
        read_trajectory(bad)


def test_incomplete_grid_rejected(tmp_path):
    bad = tmp_path / "grid.csv"
    bad.write_text("x,y,phi\n0,0,0.5\n0,1,0.5\n1,0,0.5\n")
    with pytest.raises(VizDataError, match="grid.csv"):
        read_levelset(bad)


# -- trajectory figure ---------------------------------------------------------


def test_render_full_composition(tmp_path):
    spec = FigureSpec(
        trajectories=(write_trajectory(tmp_path / "trajectory.csv"),),
        levelset=write_levelset(tmp_path / "grid.csv"),
        gradient=write_gradient(tmp_path / "grid_gradient.csv"),
        scenario=write_scenario(tmp_path / "scenario.json"),
        out=tmp_path / "fig.png",
    )
    out = render_trajectory_figure(spec)
    assert out.exists()
    assert out.read_bytes()[:8] == PNG_MAGIC


def test_render_contour_only(tmp_path):
    spec = FigureSpec(
        trajectories=(),
        levelset=write_levelset(tmp_path / "grid.csv"),
        out=tmp_path / "fig.png",
    )
    assert render_trajectory_figure(spec).exists()


def test_render_two_trajectories(tmp_path):
    spec = FigureSpec(
        trajectories=(
            write_trajectory(tmp_path / "full.csv"),
            write_trajectory(tmp_path / "averaged.csv", shift=0.05),
        ),
        labels=("full", "averaged"),
        levelset=write_levelset(tmp_path / "grid.csv"),
        out=tmp_path / "fig.png",
    )
    assert render_trajectory_figure(spec).exists()


def test_cli_trajectory_malformed_input_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "grid.csv"
    bad.write_text("not,a,grid\n")
    code = main(["trajectory", "--levelset", str(bad), "--out", str(tmp_path / "fig.png")])
    assert code == 1
    assert "grid.csv" in capsys.readouterr().err


# -- scaling figure --------------------------------------------------------------


def test_scaling_requires_two_reports(tmp_path):
    with pytest.raises(ValueError):
        render_scaling_figure([{"epsilon": 0.0175, "max_dev": 1e-3}], tmp_path / "s.png")


def test_scaling_renders_pair_and_duplicates(tmp_path):
    reports = [
        {"epsilon": 0.0175, "max_dev": 1.9e-3},
        {"epsilon": 0.004375, "max_dev": 4.2e-4},
    ]
    out = render_scaling_figure(reports, tmp_path / "s.png")
    assert out.read_bytes()[:8] == PNG_MAGIC
    out = render_scaling_figure(reports + reports, tmp_path / "dup.png")
    assert out.exists()


def test_cli_scaling_from_report_file(tmp_path):
    report = tmp_path / "averaging_report.json"
    report.write_text(
        json.dumps(
            {
                "suite": "averaging",
                "passed": True,
                "checks": [],
                "reports": [
                    {"epsilon": 0.0175, "max_dev": 1.9e-3, "mean_dev": 1.2e-3, "horizon": 29.7},
                    {"epsilon": 0.004375, "max_dev": 4.2e-4, "mean_dev": 2.7e-4, "horizon": 29.7},
                ],
            }
        )
    )
    out = tmp_path / "scaling.png"
    assert main(["scaling", "--reports", str(report), "--out", str(out)]) == 0
    assert out.exists()


# -- end to end against the simulator CLI ----------------------------------------


def run_escnav(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "escnav.cli", *args], capture_output=True, text=True
    )


def test_particle_static_figure_end_to_end(tmp_path):
    """The headline composition from the bundled static scenario's exports."""
    pytest.importorskip("escnav")
    run_dir = tmp_path / "run"
    proc = run_escnav("run", "particle_static", "--out", str(run_dir))
    assert proc.returncode == 0, proc.stderr
    proc = run_escnav(
        "levelset", "particle_static", "--grid", "81", "--out", str(tmp_path / "grid.csv")
    )
    assert proc.returncode == 0, proc.stderr

    import escnav

    scenario_path = Path(str(escnav.scenario_io.resolve_scenario_path("particle_static")))

    out = tmp_path / "particle_static.png"
    code = main(
        [
            "trajectory",
            "--trajectory",
            str(run_dir / "trajectory.csv"),
            "--label",
            "extremum seeking",
            "--levelset",
            str(tmp_path / "grid.csv"),
            "--gradient",
            str(tmp_path / "grid_gradient.csv"),
            "--scenario",
            str(scenario_path),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    data = out.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 20_000  # a real figure, not an empty canvas
