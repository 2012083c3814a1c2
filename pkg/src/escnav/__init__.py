"""Deterministic 2-D source seeking in cluttered worlds.

An agent that can only sample a scalar potential descends it through a
navigation function shaped by the obstacles it has discovered, driven by a
two-axis sinusoidal extremum-seeking loop.  The package provides the
geometry, the potential, the controller, a deterministic simulator, an
independent oracle suite for the averaging and collision-avoidance claims,
and a CLI for scenario execution and data export.
"""

from .esc import EscParams, EscState, continuous_rhs, esc_step, hpf_step, modulation, perturbation
from .oracle import (
    BoundaryRepulsion,
    DeviationReport,
    FlowTrajectory,
    OracleError,
    averaged_flow,
    deviation,
    esc_flow,
    finite_diff,
    gradient_flow,
    repulsion_check,
)
from .potential import NavFunction, OutsideFreeSpaceError, SourcePotential, Waypoint
from .scenario_io import (
    ScenarioFormatError,
    bundled_scenario_names,
    load_bundled_scenario,
    load_scenario,
)
from .sim import (
    Event,
    EventLog,
    NavMode,
    RunResult,
    RunSummary,
    Scenario,
    ScenarioError,
    SimMode,
    TrajectorySample,
    check_collision,
    run,
    sensor_scan,
)
from .world import GeometryError, Obstacle, Vec2, World

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "GeometryError",
    "Vec2",
    "Obstacle",
    "World",
    "OutsideFreeSpaceError",
    "Waypoint",
    "SourcePotential",
    "NavFunction",
    "EscParams",
    "EscState",
    "modulation",
    "perturbation",
    "hpf_step",
    "esc_step",
    "continuous_rhs",
    "OracleError",
    "FlowTrajectory",
    "DeviationReport",
    "BoundaryRepulsion",
    "finite_diff",
    "gradient_flow",
    "averaged_flow",
    "esc_flow",
    "deviation",
    "repulsion_check",
    "ScenarioError",
    "NavMode",
    "SimMode",
    "Scenario",
    "TrajectorySample",
    "Event",
    "EventLog",
    "RunSummary",
    "RunResult",
    "sensor_scan",
    "check_collision",
    "run",
    "ScenarioFormatError",
    "load_scenario",
    "load_bundled_scenario",
    "bundled_scenario_names",
]
