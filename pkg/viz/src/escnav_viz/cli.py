"""Command-line entry points.

    escnav-viz trajectory --levelset grid.csv --out fig.png \
        [--trajectory run/trajectory.csv ...] [--label NAME ...] \
        [--gradient grid_gradient.csv] [--scenario scenario.json]

    escnav-viz scaling --reports averaging_report.json --out fig.png

Inputs are escnav CLI exports; a malformed file exits nonzero naming it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, render_scaling_figure, render_trajectory_figure
from .io import VizDataError, read_deviation_reports

__all__ = ["main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="escnav-viz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_traj = sub.add_parser("trajectory", help="trajectory over potential level sets")
    p_traj.add_argument(
        "--trajectory",
        action="append",
        default=[],
        help="trajectory.csv export; repeat for overlays (first is drawn black)",
    )
    p_traj.add_argument("--label", action="append", default=[], help="legend label per trajectory")
    p_traj.add_argument("--levelset", required=True, help="level-set grid CSV")
    p_traj.add_argument("--gradient", default=None, help="gradient-field CSV for descent arrows")
    p_traj.add_argument("--scenario", default=None, help="scenario JSON for obstacle discs")
    p_traj.add_argument("--out", required=True, help="output image path (png/svg)")

    p_scale = sub.add_parser("scaling", help="deviation vs ripple parameter, log-log")
    p_scale.add_argument(
        "--reports",
        action="append",
        required=True,
        help="validation report JSON with deviation records; repeatable",
    )
    p_scale.add_argument("--out", required=True, help="output image path (png/svg)")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "trajectory":
            spec = FigureSpec(
                trajectories=tuple(Path(p) for p in args.trajectory),
                labels=tuple(args.label),
                levelset=Path(args.levelset),
                gradient=Path(args.gradient) if args.gradient else None,
                scenario=Path(args.scenario) if args.scenario else None,
                out=Path(args.out),
            )
            out = render_trajectory_figure(spec)
        else:
            reports = []
            for path in args.reports:
                reports.extend(read_deviation_reports(path))
            out = render_scaling_figure(reports, args.out)
    except VizDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"figure -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
