"""Readers for the escnav file contracts.

Only the documented export formats are consumed here: trajectory CSV,
level-set grid CSV, gradient-field CSV, scenario JSON (for obstacle discs)
and validation report JSON.  No code is shared with the simulator package.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "VizDataError",
    "Trajectory",
    "LevelSetGrid",
    "GradientField",
    "WorldOutline",
    "read_trajectory",
    "read_levelset",
    "read_gradient_field",
    "read_world_outline",
    "read_deviation_reports",
]

TRAJECTORY_COLUMNS = ("t", "x", "y", "src_x", "src_y")


class VizDataError(ValueError):
    """An input file does not match its documented format."""

    def __init__(self, path: Path | str, message: str) -> None:
        self.path = str(path)
        super().__init__(f"{path}: {message}")


def _read_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise VizDataError(path, str(exc)) from exc
    if not rows:
        raise VizDataError(path, "empty file")
    header = rows[0]
    missing = [name for name in expected_header if name not in header]
    if missing:
        raise VizDataError(path, f"missing columns {missing} in header {header}")
    return rows


@dataclass(frozen=True)
class Trajectory:
    label: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    src_x: np.ndarray
    src_y: np.ndarray


def read_trajectory(path: Path | str, label: str = "") -> Trajectory:
    path = Path(path)
    rows = _read_rows(path, list(TRAJECTORY_COLUMNS))
    header = rows[0]
    idx = {name: header.index(name) for name in TRAJECTORY_COLUMNS}
    columns: dict[str, list[float]] = {name: [] for name in TRAJECTORY_COLUMNS}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise VizDataError(path, f"row {i} has {len(row)} fields, expected {len(header)}")
        try:
            for name in TRAJECTORY_COLUMNS:
                columns[name].append(float(row[idx[name]]))
        except ValueError as exc:
            raise VizDataError(path, f"row {i}: {exc}") from exc
    return Trajectory(
        label=label or path.stem,
        t=np.array(columns["t"]),
        x=np.array(columns["x"]),
        y=np.array(columns["y"]),
        src_x=np.array(columns["src_x"]),
        src_y=np.array(columns["src_y"]),
    )


@dataclass(frozen=True)
class LevelSetGrid:
    x: np.ndarray  # axis values, ascending
    y: np.ndarray
    phi: np.ndarray  # shape (len(y), len(x)); NaN where undefined


def read_levelset(path: Path | str) -> LevelSetGrid:
    path = Path(path)
    rows = _read_rows(path, ["x", "y", "phi"])
    points: dict[tuple[float, float], float] = {}
    xs: set[float] = set()
    ys: set[float] = set()
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise VizDataError(path, f"row {i} has {len(row)} fields, expected 3")
        try:
            x = float(row[0])
            y = float(row[1])
            value = float(row[2]) if row[2] != "" else math.nan
        except ValueError as exc:
            raise VizDataError(path, f"row {i}: {exc}") from exc
        xs.add(x)
        ys.add(y)
        points[(x, y)] = value
    x_axis = np.array(sorted(xs))
    y_axis = np.array(sorted(ys))
    if len(points) != x_axis.size * y_axis.size:
        raise VizDataError(path, "rows do not form a complete rectangular grid")
    phi = np.full((y_axis.size, x_axis.size), math.nan)
    for j, y in enumerate(y_axis):
        for i, x in enumerate(x_axis):
            phi[j, i] = points[(float(x), float(y))]
    return LevelSetGrid(x=x_axis, y=y_axis, phi=phi)


@dataclass(frozen=True)
class GradientField:
    x: np.ndarray
    y: np.ndarray
    gx: np.ndarray
    gy: np.ndarray


def read_gradient_field(path: Path | str) -> GradientField:
    path = Path(path)
    rows = _read_rows(path, ["x", "y", "gx", "gy"])
    x, y, gx, gy = [], [], [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise VizDataError(path, f"row {i} has {len(row)} fields, expected 4")
        if row[2] == "" or row[3] == "":
            continue  # undefined outside the free space
        try:
            x.append(float(row[0]))
            y.append(float(row[1]))
            gx.append(float(row[2]))
            gy.append(float(row[3]))
        except ValueError as exc:
            raise VizDataError(path, f"row {i}: {exc}") from exc
    return GradientField(x=np.array(x), y=np.array(y), gx=np.array(gx), gy=np.array(gy))


@dataclass(frozen=True)
class WorldOutline:
    center: tuple[float, float]
    radius: float
    obstacles: list[tuple[float, float, float]]  # (x, y, r) true radii
    inflation: float


def read_world_outline(path: Path | str) -> WorldOutline:
    """Obstacle discs and workspace circle from a scenario document."""
    path = Path(path)
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise VizDataError(path, str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise VizDataError(path, f"invalid JSON: {exc}") from exc
    try:
        world = data["world"]
        obstacles = [(float(x), float(y), float(r)) for x, y, r in world["obstacles"]]
        return WorldOutline(
            center=(float(world["center"][0]), float(world["center"][1])),
            radius=float(world["radius"]),
            obstacles=obstacles,
            inflation=float(world.get("inflation", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise VizDataError(path, f"not a scenario document: {exc}") from exc


def read_deviation_reports(path: Path | str) -> list[dict]:
    """Deviation records from a validation report (or a bare JSON list)."""
    path = Path(path)
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise VizDataError(path, str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise VizDataError(path, f"invalid JSON: {exc}") from exc
    reports = data.get("reports") if isinstance(data, dict) else data
    if not isinstance(reports, list):
        raise VizDataError(path, "expected a 'reports' list or a JSON array")
    for entry in reports:
        if not isinstance(entry, dict) or "epsilon" not in entry or "max_dev" not in entry:
            raise VizDataError(path, f"report entries need epsilon and max_dev: {entry!r}")
    return reports
