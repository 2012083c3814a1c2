"""Figure assembly from escnav exports.

The trajectory figure reproduces the usual composition for this kind of
experiment: potential level sets, obstacle discs, the driven trajectory in
black with an "x" at the start, the source as a red "o", optional descent
arrows from the exported gradient field, and optional reference trajectories
(e.g. an averaged or exact-gradient flow) in magenta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    read_gradient_field,
    read_levelset,
    read_trajectory,
    read_world_outline,
)

__all__ = ["FigureSpec", "render_trajectory_figure", "render_scaling_figure"]

CONTOUR_LEVELS = np.linspace(0.0, 1.0, 21)


@dataclass(frozen=True)
class FigureSpec:
    """Inputs of one trajectory figure; all paths point at CLI exports."""

    trajectories: tuple[Path, ...]
    levelset: Path
    out: Path
    gradient: Path | None = None
    scenario: Path | None = None
    labels: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.trajectories and self.levelset is None:
            raise ValueError("need at least a level-set grid or one trajectory")


def _draw_world(ax, outline) -> None:
    workspace = plt.Circle(
        outline.center, outline.radius, fill=False, color="black", linewidth=1.2
    )
    ax.add_patch(workspace)
    for x, y, r in outline.obstacles:
        ax.add_patch(plt.Circle((x, y), r, facecolor="0.45", edgecolor="black", zorder=3))
        if outline.inflation > 0.0:
            ax.add_patch(
                plt.Circle(
                    (x, y),
                    r + outline.inflation,
                    fill=False,
                    linestyle=":",
                    color="0.35",
                    linewidth=0.8,
                    zorder=3,
                )
            )


def render_trajectory_figure(spec: FigureSpec) -> Path:
    """Render the trajectory-over-level-sets figure and return the image path."""
    fig, ax = plt.subplots(figsize=(7.0, 7.0))

    grid = read_levelset(spec.levelset)
    contours = ax.contour(
        grid.x, grid.y, grid.phi, levels=CONTOUR_LEVELS, cmap="viridis", linewidths=0.7
    )
    fig.colorbar(contours, ax=ax, fraction=0.046, label="potential")

    if spec.gradient is not None:
        fld = read_gradient_field(spec.gradient)
        norms = np.hypot(fld.gx, fld.gy)
        keep = norms > 0.0
        ax.quiver(
            fld.x[keep],
            fld.y[keep],
            -fld.gx[keep] / norms[keep],
            -fld.gy[keep] / norms[keep],
            color="magenta",
            alpha=0.6,
            scale=40.0,
            width=0.003,
            zorder=2,
        )

    if spec.scenario is not None:
        _draw_world(ax, read_world_outline(spec.scenario))

    styles = [
        {"color": "black", "linewidth": 1.2},
        {"color": "magenta", "linewidth": 1.4, "linestyle": "--"},
        {"color": "tab:blue", "linewidth": 1.0, "linestyle": "-."},
    ]
    source_marked = False
    for i, path in enumerate(spec.trajectories):
        label = spec.labels[i] if i < len(spec.labels) else None
        traj = read_trajectory(path, label=label or Path(path).stem)
        style = styles[min(i, len(styles) - 1)]
        ax.plot(traj.x, traj.y, label=traj.label, zorder=4, **style)
        if i == 0 and traj.x.size:
            ax.plot(traj.x[0], traj.y[0], "x", color="black", markersize=10, zorder=5)
        if not source_marked and traj.src_x.size:
            ax.plot(
                traj.src_x[-1],
                traj.src_y[-1],
                "o",
                markerfacecolor="none",
                markeredgecolor="red",
                markersize=10,
                zorder=5,
            )
            source_marked = True

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    if spec.trajectories:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_scaling_figure(reports: list[dict], out: Path | str) -> Path:
    """Log-log max deviation against the ripple parameter, with a slope-1 guide.

    Needs at least two deviation records so a trend is visible.
    """
    if len(reports) < 2:
        raise ValueError(f"need at least two deviation reports, got {len(reports)}")
    eps = np.array([float(r["epsilon"]) for r in reports])
    dev = np.array([float(r["max_dev"]) for r in reports])
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.loglog(eps, dev, "o", color="black", label="max deviation")
    anchor = int(np.argmax(eps))
    guide = np.array([eps.min() / 1.5, eps.max() * 1.5])
    ax.loglog(
        guide,
        dev[anchor] * guide / eps[anchor],
        "--",
        color="0.5",
        label="slope 1 reference",
    )
    ax.set_xlabel("ripple parameter alpha*gain/omega")
    ax.set_ylabel("max deviation from averaged flow [m]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
