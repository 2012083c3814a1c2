"""Figure rendering for escnav simulation exports."""

from .figures import FigureSpec, render_scaling_figure, render_trajectory_figure
from .io import (
    VizDataError,
    read_deviation_reports,
    read_gradient_field,
    read_levelset,
    read_trajectory,
    read_world_outline,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FigureSpec",
    "render_trajectory_figure",
    "render_scaling_figure",
    "VizDataError",
    "read_trajectory",
    "read_levelset",
    "read_gradient_field",
    "read_world_outline",
    "read_deviation_reports",
]
