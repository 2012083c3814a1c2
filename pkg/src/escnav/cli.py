"""Command-line front end.

Subcommands::

    escnav run SCENARIO --out DIR          execute one scenario, export CSVs
    escnav levelset SCENARIO --grid N --out FILE
                                           potential grid + gradient field
    escnav validate --suite NAME [--out DIR]
                                           oracle verification suites
    escnav sweep SCENARIO --param NAME --values V1,V2,... --out DIR
                                           one run per value, summary table

SCENARIO is a file path or a bundled scenario name.  All numeric CSV output
is written with 17 significant digits and a period decimal separator, and is
byte-identical across repeated runs of the same scenario.

Exit codes for ``run``: 0 converged without collision, 2 collision,
3 finished without converging, 1 bad scenario/usage.  ``validate`` exits 0
only if every check passes (1 for an unknown suite, 2 on failed checks).
``ESCNAV_THREADS`` caps the sweep worker pool.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .potential import NavFunction
from .scenario_io import (
    ScenarioFormatError,
    bundled_scenario_names,
    load_scenario,
    resolve_scenario_path,
)
from .sim import RunResult, Scenario, ScenarioError, run, scenario_with_param
from .validate import SUITE_NAMES, run_suite
from .world import Vec2

__all__ = ["main", "cmd_run", "cmd_levelset", "cmd_validate", "cmd_sweep"]

TRAJECTORY_HEADER = "t,x,y,vx,vy,eta,phi,f0,src_x,src_y,known_count,clearance"

# gradient-field companion grid is this many times coarser than the Phi grid
GRADIENT_GRID_DIVISOR = 8


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _load(scenario_arg: str) -> Scenario:
    return load_scenario(resolve_scenario_path(scenario_arg))


def write_trajectory_csv(path: Path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for s in result.trajectory:
            fh.write(
                ",".join(
                    (
                        _fmt(s.t),
                        _fmt(s.p.x),
                        _fmt(s.p.y),
                        _fmt(s.v_cmd.x),
                        _fmt(s.v_cmd.y),
                        _fmt(s.eta),
                        _fmt(s.phi_meas),
                        _fmt(s.f0_meas),
                        _fmt(s.source_pos.x),
                        _fmt(s.source_pos.y),
                        str(s.known_count),
                        _fmt(s.clearance),
                    )
                )
                + "\n"
            )


def write_events_csv(path: Path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,kind,payload\n")
        for event in result.events:
            payload = json.dumps(event.payload, sort_keys=True, separators=(",", ":"))
            if "," in payload or '"' in payload:
                payload = '"' + payload.replace('"', '""') + '"'
            fh.write(f"{_fmt(event.t)},{event.kind},{payload}\n")


def write_summary_json(path: Path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(result.summary.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(scenario_arg: str, out_dir: str) -> int:
    """Run one scenario and export trajectory.csv, events.csv, summary.json."""
    try:
        scenario = _load(scenario_arg)
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = run(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", result)
    write_events_csv(out / "events.csv", result)
    write_summary_json(out / "summary.json", result)
    s = result.summary
    print(
        f"{scenario_arg}: t_end={s.final_time:g} final_distance={s.final_distance:.6g} "
        f"min_clearance={s.min_clearance:.6g} converged={str(s.converged).lower()} "
        f"collided={str(s.collided).lower()} -> {out}"
    )
    if s.collided:
        return 2
    if not s.converged:
        return 3
    return 0


def _levelset_nav(scenario: Scenario) -> NavFunction:
    # full knowledge: the exact potential the run would end up with
    k = scenario.nav_mode.k
    if scenario.nav_mode.kind == "discovery":
        k = max(1, len(scenario.world.obstacles))
    return NavFunction(
        world=scenario.world,
        source=scenario.source,
        k=k,
        known_ids=scenario.world.obstacle_ids,
    )


def _grid_axis(center: float, radius: float, n: int) -> list[float]:
    if n == 1:
        return [center]
    return [center - radius + 2.0 * radius * i / (n - 1) for i in range(n)]


def cmd_levelset(scenario_arg: str, grid_n: int, out_path: str) -> int:
    """Export the potential on a grid plus a coarser gradient field.

    Rows cover the workspace bounding box; the potential column is blank
    wherever the potential is undefined (outside the known free space).  The
    companion ``*_gradient.csv`` holds the analytic gradient on a grid
    GRADIENT_GRID_DIVISOR times coarser.
    """
    if grid_n < 2:
        print(f"error: grid must be >= 2, got {grid_n}", file=sys.stderr)
        return 1
    try:
        scenario = _load(scenario_arg)
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    nav = _levelset_nav(scenario)
    world = scenario.world
    c, radius = world.workspace_center, world.workspace_radius
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,phi\n")
        for y in _grid_axis(c.y, radius, grid_n):
            for x in _grid_axis(c.x, radius, grid_n):
                p = Vec2(x, y)
                if world.beta_product(nav.known_ids, p) >= 0.0:
                    fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(nav.value(p, 0.0))}\n")
                else:
                    fh.write(f"{_fmt(x)},{_fmt(y)},\n")
    coarse = max(2, grid_n // GRADIENT_GRID_DIVISOR)
    gradient_path = out.with_name(out.stem + "_gradient" + (out.suffix or ".csv"))
    with open(gradient_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,gx,gy\n")
        for y in _grid_axis(c.y, radius, coarse):
            for x in _grid_axis(c.x, radius, coarse):
                p = Vec2(x, y)
                if world.beta_product(nav.known_ids, p) >= 0.0:
                    g = nav.gradient(p, 0.0)
                    fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(g.x)},{_fmt(g.y)}\n")
                else:
                    fh.write(f"{_fmt(x)},{_fmt(y)},,\n")
    print(f"{scenario_arg}: {grid_n}x{grid_n} grid -> {out}, gradient field -> {gradient_path}")
    return 0


def cmd_validate(suite_name: str, out_dir: str | None = None) -> int:
    """Run one verification suite and print a PASS/FAIL line per check."""
    try:
        report = run_suite(suite_name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    for check in report.checks:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name} {check.detail}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{suite_name}_report.json"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report -> {path}")
    return 0 if report.passed else 2


SWEEP_HEADER = (
    "param,value,final_time,final_x,final_y,final_distance,min_clearance,"
    "path_length,ticks,converged,collided,known_count"
)


def _sweep_worker(scenario: Scenario) -> dict:
    return run(scenario).summary.as_dict()


def _sweep_pool_size(n_jobs: int) -> int:
    cap = os.environ.get("ESCNAV_THREADS", "")
    try:
        limit = int(cap) if cap else os.cpu_count() or 1
    except ValueError:
        limit = 1
    return max(1, min(limit, n_jobs))


def cmd_sweep(scenario_arg: str, param: str, values: list[float], out_dir: str) -> int:
    """Run the scenario once per parameter value and tabulate the summaries."""
    try:
        scenario = _load(scenario_arg)
        scenarios = [scenario_with_param(scenario, param, v) for v in values]
    except (ScenarioFormatError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    workers = _sweep_pool_size(len(scenarios)) if scenarios else 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_sweep_worker, scenarios))
    else:
        summaries = [_sweep_worker(sc) for sc in scenarios]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for value, summary in zip(values, summaries):
            fh.write(
                ",".join(
                    (
                        param,
                        _fmt(value),
                        _fmt(summary["final_time"]),
                        _fmt(summary["final_x"]),
                        _fmt(summary["final_y"]),
                        _fmt(summary["final_distance"]),
                        _fmt(summary["min_clearance"]),
                        _fmt(summary["path_length"]),
                        str(summary["ticks"]),
                        str(summary["converged"]).lower(),
                        str(summary["collided"]).lower(),
                        str(summary["known_count"]),
                    )
                )
                + "\n"
            )
    print(f"{len(values)} run(s) -> {path}")
    return 0


def _parse_values(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --values list: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escnav",
        description=(
            "Deterministic 2-D source seeking: navigation functions driven by a "
            "sinusoidal extremum-seeking loop. Bundled scenarios: "
            + ", ".join(bundled_scenario_names())
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and export CSVs")
    p_run.add_argument("scenario", help="scenario file or bundled scenario name")
    p_run.add_argument("--out", required=True, help="output directory")

    p_level = sub.add_parser("levelset", help="export the potential on a grid")
    p_level.add_argument("scenario", help="scenario file or bundled scenario name")
    p_level.add_argument("--grid", type=int, default=201, help="grid points per axis (>= 2)")
    p_level.add_argument("--out", required=True, help="output CSV path")

    p_val = sub.add_parser("validate", help="run a verification suite")
    p_val.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITE_NAMES)}")
    p_val.add_argument("--out", default=None, help="directory for the JSON report")

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    p_sweep.add_argument("scenario", help="scenario file or bundled scenario name")
    p_sweep.add_argument("--param", required=True, help="ESC parameter name or 'inflation'")
    p_sweep.add_argument("--values", required=True, type=_parse_values, help="comma-separated list")
    p_sweep.add_argument("--out", required=True, help="output directory")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.out)
    if args.command == "levelset":
        return cmd_levelset(args.scenario, args.grid, args.out)
    if args.command == "validate":
        return cmd_validate(args.suite, args.out)
    if args.command == "sweep":
        return cmd_sweep(args.scenario, args.param, args.values, args.out)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
