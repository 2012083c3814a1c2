"""Closed-loop scenario execution.

A scenario couples a world, a (possibly moving) source, controller
parameters and a navigation mode, then runs the loop deterministically:
no randomness anywhere, so identical scenarios produce bit-identical
trajectories.

Per tick the simulator (1) moves the source, (2) scans for nearby obstacles
and folds discoveries into the potential, (3) measures the potential at the
dithered probe point, (4) steps the controller, (5) integrates the position,
and (6) checks collisions and convergence.  Sampled mode holds each velocity
command over the tick (zero-order hold); continuous mode integrates the
coupled loop with fixed-step RK4 and applies no saturation.

Collision tests always use the true (uninflated) obstacle radii: the gap
between the virtual boundary the potential enforces and the physical surface
is exactly the safety margin under study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from . import esc
from .esc import EscParams, EscState
from .integrate import rk4_step
from .oracle import FlowTrajectory
from .potential import NavFunction, OutsideFreeSpaceError, SourcePotential
from .world import Vec2, World, WORKSPACE_ID

__all__ = [
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
]

# continuous-mode default: forty RK4 steps per dither period
CONTINUOUS_STEPS_PER_PERIOD = 40.0


class ScenarioError(ValueError):
    """A scenario violates its invariants and cannot be run."""


@dataclass(frozen=True, slots=True)
class NavMode:
    """Either a fixed order ("fixed", k >= 1) or incremental discovery."""

    kind: str
    k: int = 0
    bootstrap_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "discovery"):
            raise ScenarioError(f"nav mode must be 'fixed' or 'discovery', got {self.kind!r}")
        if self.kind == "fixed" and self.k < 1:
            raise ScenarioError(f"fixed nav mode needs k >= 1, got {self.k!r}")

    @classmethod
    def fixed(cls, k: int) -> "NavMode":
        return cls(kind="fixed", k=k)

    @classmethod
    def discovery(cls, bootstrap_scale: float = 0.1) -> "NavMode":
        return cls(kind="discovery", bootstrap_scale=bootstrap_scale)


@dataclass(frozen=True, slots=True)
class SimMode:
    """Integration mode: controller-tick sampling or fixed-step RK4."""

    kind: str
    step_dt: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("sampled", "continuous"):
            raise ScenarioError(f"mode must be 'sampled' or 'continuous', got {self.kind!r}")
        if self.step_dt is not None and not (math.isfinite(self.step_dt) and self.step_dt > 0.0):
            raise ScenarioError(f"step_dt must be positive, got {self.step_dt!r}")

    @classmethod
    def sampled(cls) -> "SimMode":
        return cls(kind="sampled")

    @classmethod
    def continuous(cls, step_dt: Optional[float] = None) -> "SimMode":
        return cls(kind="continuous", step_dt=step_dt)


@dataclass(frozen=True)
class Scenario:
    """Complete, deterministic description of one run."""

    world: World
    source: SourcePotential
    esc: EscParams
    nav_mode: NavMode
    start: Vec2
    duration: float
    mode: SimMode = field(default_factory=SimMode.sampled)
    detection_radius: float = math.inf
    convergence_radius: float = 0.1
    convergence_hold: float = 1.0
    collision_stop: bool = True

    def __post_init__(self) -> None:
        if not (self.duration >= 0.0 and math.isfinite(self.duration)):
            raise ScenarioError(f"duration must be finite and >= 0, got {self.duration!r}")
        if math.isnan(self.detection_radius) or self.detection_radius < 0.0:
            raise ScenarioError(f"detection_radius must be >= 0, got {self.detection_radius!r}")
        if not (math.isfinite(self.convergence_radius) and self.convergence_radius > 0.0):
            raise ScenarioError(
                f"convergence_radius must be positive, got {self.convergence_radius!r}"
            )
        if math.isnan(self.convergence_hold) or self.convergence_hold < 0.0:
            raise ScenarioError(f"convergence_hold must be >= 0, got {self.convergence_hold!r}")
        free, clearance = self.world.in_free_space(self.start, inflated=True)
        if not free:
            raise ScenarioError(
                f"start ({self.start.x}, {self.start.y}) is not in the inflated free space "
                f"(clearance {clearance})"
            )

    def initial_nav(self) -> NavFunction:
        if self.nav_mode.kind == "fixed":
            return NavFunction(world=self.world, source=self.source, k=self.nav_mode.k)
        return NavFunction(
            world=self.world,
            source=self.source,
            k=0,
            discovery=True,
            bootstrap_scale=self.nav_mode.bootstrap_scale,
        )

    def continuous_step(self) -> float:
        if self.mode.step_dt is not None:
            return self.mode.step_dt
        return 2.0 * math.pi / (CONTINUOUS_STEPS_PER_PERIOD * self.esc.omega)


@dataclass(frozen=True, slots=True)
class TrajectorySample:
    """One logged instant: controller state plus what was measured there.

    ``p`` is the unperturbed controller position; ``phi_meas`` and
    ``f0_meas`` were taken at the dithered probe point.  ``clearance`` is the
    true (uninflated) clearance at ``p``.
    """

    t: float
    p: Vec2
    v_cmd: Vec2
    eta: float
    phi_meas: float
    f0_meas: float
    source_pos: Vec2
    known_count: int
    clearance: float


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    payload: dict


class EventLog:
    """Append-only, time-ordered list of run events."""

    def __init__(self) -> None:
        self._events: list[Event] = []

    def add(self, t: float, kind: str, **payload) -> None:
        if self._events and t < self._events[-1].t:
            raise ValueError(f"events must be time-ordered: {t} after {self._events[-1].t}")
        self._events.append(Event(t=t, kind=kind, payload=payload))

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __getitem__(self, idx):
        return self._events[idx]

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self._events if e.kind == kind]

    def count(self, kind: str) -> int:
        return sum(1 for e in self._events if e.kind == kind)


@dataclass(frozen=True)
class RunSummary:
    final_time: float
    final_position: Vec2
    final_distance: float
    min_clearance: float
    path_length: float
    ticks: int
    converged: bool
    collided: bool
    known_count: int

    def as_dict(self) -> dict:
        return {
            "final_time": self.final_time,
            "final_x": self.final_position.x,
            "final_y": self.final_position.y,
            "final_distance": self.final_distance,
            "min_clearance": self.min_clearance,
            "path_length": self.path_length,
            "ticks": self.ticks,
            "converged": self.converged,
            "collided": self.collided,
            "known_count": self.known_count,
        }


@dataclass(frozen=True)
class RunResult:
    trajectory: list[TrajectorySample]
    events: EventLog
    summary: RunSummary

    def flow(self) -> FlowTrajectory:
        """Positions as a bare flow, for comparison against reference flows."""
        times = np.array([s.t for s in self.trajectory])
        points = np.array([[s.p.x, s.p.y] for s in self.trajectory])
        return FlowTrajectory(times=times, points=points)


def sensor_scan(
    world: World, nav: NavFunction, p: Vec2, detection_radius: float
) -> tuple[int, ...]:
    """Ids of not-yet-known obstacles whose inflated surface is within range.

    The threshold is a closed inequality: an obstacle exactly at
    ``detection_radius`` counts as detected.
    """
    found = []
    for ob in world.obstacles:
        if ob.id in nav.known_ids:
            continue
        if ob.surface_distance(p, inflated=True) <= detection_radius:
            found.append(ob.id)
    return tuple(found)


def check_collision(world: World, p: Vec2) -> Optional[int]:
    """Id of the violated obstacle (0 for the workspace rim), or None.

    A true collision test: uninflated radii, boundary contact not counted.
    """
    if p.distance_to(world.workspace_center) > world.workspace_radius:
        return WORKSPACE_ID
    for ob in world.obstacles:
        if ob.surface_distance(p) < 0.0:
            return ob.id
    return None


class _ConvergenceTracker:
    """Detects staying within the convergence radius for the hold time."""

    def __init__(self, radius: float, hold: float) -> None:
        self.radius = radius
        self.hold = hold
        self.entered_at: Optional[float] = None
        self.converged = False

    def update(self, t: float, p: Vec2, source: SourcePotential, events: EventLog) -> None:
        if p.distance_to(source.position(t)) <= self.radius:
            if self.entered_at is None:
                self.entered_at = t
            if not self.converged and t - self.entered_at >= self.hold:
                self.converged = True
                events.add(t, "converged", entered_at=self.entered_at)
        else:
            self.entered_at = None


def _measure(
    nav: NavFunction, probe: Vec2, t: float, events: EventLog
) -> float:
    """Potential at the probe; out-of-domain probes are pegged to the boundary value."""
    try:
        value, diag = nav.value_with_diagnostic(probe, t)
    except OutsideFreeSpaceError:
        events.add(
            t,
            "warning",
            text=f"probe ({probe.x}, {probe.y}) left the known free space; measurement pegged to 1",
        )
        return 1.0
    if diag is not None:
        events.add(t, "warning", text=diag)
    return value


def run(scenario: Scenario) -> RunResult:
    """Execute a scenario and return its trajectory, events and summary."""
    events = EventLog()
    for note in scenario.esc.assumption_warnings():
        events.add(0.0, "warning", text=note)
    nav = scenario.initial_nav()
    if scenario.mode.kind == "sampled":
        return _run_sampled(scenario, nav, events)
    return _run_continuous(scenario, nav, events)


def _split_duration(duration: float, dt: float) -> tuple[int, float]:
    n_full = int(math.floor(duration / dt + 1e-9))
    tail = duration - n_full * dt
    if tail < 1e-12 * max(1.0, duration):
        tail = 0.0
    return n_full, tail


def _run_sampled(scenario: Scenario, nav: NavFunction, events: EventLog) -> RunResult:
    world = scenario.world
    source = scenario.source
    params = scenario.esc
    dt = params.tick_dt
    n_full, tail = _split_duration(scenario.duration, dt)

    state = EscState()
    p = scenario.start
    samples: list[TrajectorySample] = []
    tracker = _ConvergenceTracker(scenario.convergence_radius, scenario.convergence_hold)
    min_clearance = math.inf
    path_length = 0.0
    collided = False
    ticks = 0
    end_time = scenario.duration

    def observe(t: float, nav: NavFunction) -> tuple[NavFunction, Vec2, float, float, float, Vec2]:
        nonlocal min_clearance
        src = source.position(t)
        newly = sensor_scan(world, nav, p, scenario.detection_radius)
        for oid in newly:
            events.add(t, "discovery", id=oid)
        if newly:
            nav = nav.discover(newly)
        probe = p + esc.perturbation(params, t)
        phi_meas = _measure(nav, probe, t, events)
        f0_meas = source.value(probe, t)
        _, clearance = world.in_free_space(p)
        if clearance < min_clearance:
            min_clearance = clearance
        return nav, src, phi_meas, f0_meas, clearance, probe

    stop = False
    for i in range(n_full):
        t = i * dt
        nav, src, phi_meas, f0_meas, clearance, _ = observe(t, nav)
        eta_row = state.eta if state.eta is not None else phi_meas
        state.t = t
        cmd, saturated = esc.esc_step(state, phi_meas, params, dt)
        if saturated:
            events.add(t, "saturation", vx=cmd.x, vy=cmd.y)
        samples.append(
            TrajectorySample(
                t=t,
                p=p,
                v_cmd=cmd,
                eta=eta_row,
                phi_meas=phi_meas,
                f0_meas=f0_meas,
                source_pos=src,
                known_count=len(nav.known_ids),
                clearance=clearance,
            )
        )
        p = Vec2(p.x + cmd.x * dt, p.y + cmd.y * dt)
        path_length += math.hypot(cmd.x, cmd.y) * dt
        ticks += 1
        t_next = (i + 1) * dt
        violated = check_collision(world, p)
        if violated is not None:
            collided = True
            events.add(t_next, "collision", x=p.x, y=p.y, id=violated)
            if scenario.collision_stop:
                end_time = t_next
                stop = True
                break
        tracker.update(t_next, p, source, events)

    if not stop and tail > 0.0:
        hold = state.last_command
        p = Vec2(p.x + hold.x * tail, p.y + hold.y * tail)
        path_length += math.hypot(hold.x, hold.y) * tail
        violated = check_collision(world, p)
        if violated is not None:
            collided = True
            events.add(scenario.duration, "collision", x=p.x, y=p.y, id=violated)
        else:
            tracker.update(scenario.duration, p, source, events)

    # closing snapshot at the actual end time (duration, or the collision stop)
    nav, src, phi_meas, f0_meas, clearance, _ = observe(end_time, nav)
    eta_row = state.eta if state.eta is not None else phi_meas
    samples.append(
        TrajectorySample(
            t=end_time,
            p=p,
            v_cmd=Vec2(0.0, 0.0),
            eta=eta_row,
            phi_meas=phi_meas,
            f0_meas=f0_meas,
            source_pos=src,
            known_count=len(nav.known_ids),
            clearance=clearance,
        )
    )

    summary = RunSummary(
        final_time=end_time,
        final_position=p,
        final_distance=p.distance_to(source.position(end_time)),
        min_clearance=min_clearance,
        path_length=path_length,
        ticks=ticks,
        converged=tracker.converged,
        collided=collided,
        known_count=len(nav.known_ids),
    )
    return RunResult(trajectory=samples, events=events, summary=summary)


def _run_continuous(scenario: Scenario, nav: NavFunction, events: EventLog) -> RunResult:
    world = scenario.world
    source = scenario.source
    params = scenario.esc
    step = scenario.continuous_step()
    n_full, tail = _split_duration(scenario.duration, step)

    samples: list[TrajectorySample] = []
    tracker = _ConvergenceTracker(scenario.convergence_radius, scenario.convergence_hold)
    min_clearance = math.inf
    path_length = 0.0
    collided = False
    steps = 0
    end_time = scenario.duration

    p = scenario.start

    def observe(t: float, nav: NavFunction) -> tuple[NavFunction, Vec2, float, float, float]:
        nonlocal min_clearance
        src = source.position(t)
        newly = sensor_scan(world, nav, p, scenario.detection_radius)
        for oid in newly:
            events.add(t, "discovery", id=oid)
        if newly:
            nav = nav.discover(newly)
        probe = p + esc.perturbation(params, t)
        phi_meas = nav.value(probe, t)
        f0_meas = source.value(probe, t)
        _, clearance = world.in_free_space(p)
        if clearance < min_clearance:
            min_clearance = clearance
        return nav, src, phi_meas, f0_meas, clearance

    # the filter state starts on the first measurement
    nav, src, phi0, f00, clearance0 = observe(0.0, nav)
    y = np.array([p.x, p.y, phi0], dtype=float)

    def record(t: float, v: Vec2, eta: float, src: Vec2, phi_meas: float, f0_meas: float, clearance: float, nav: NavFunction) -> None:
        samples.append(
            TrajectorySample(
                t=t,
                p=p,
                v_cmd=v,
                eta=eta,
                phi_meas=phi_meas,
                f0_meas=f0_meas,
                source_pos=src,
                known_count=len(nav.known_ids),
                clearance=clearance,
            )
        )

    plan = [(i * step, step) for i in range(n_full)]
    if tail > 0.0:
        plan.append((n_full * step, tail))

    first = True
    stop = False
    for t, h in plan:
        if first:
            first = False
        else:
            nav, src, phi_meas, f0_meas, clearance = observe(t, nav)
            phi0, f00, clearance0 = phi_meas, f0_meas, clearance

        current_nav = nav

        def rhs(tt: float, yy: np.ndarray) -> np.ndarray:
            dp, deta = esc.continuous_rhs(
                Vec2(float(yy[0]), float(yy[1])),
                float(yy[2]),
                tt,
                params,
                lambda q, qt: current_nav.value(q, qt),
            )
            return np.array([dp.x, dp.y, deta])

        y_next, k1 = rk4_step(rhs, t, y, h)
        record(t, Vec2(float(k1[0]), float(k1[1])), float(y[2]), src, phi0, f00, clearance0, nav)
        prev = p
        y = y_next
        p = Vec2(float(y[0]), float(y[1]))
        path_length += prev.distance_to(p)
        steps += 1
        t_next = t + h
        violated = check_collision(world, p)
        if violated is not None:
            collided = True
            events.add(t_next, "collision", x=p.x, y=p.y, id=violated)
            if scenario.collision_stop:
                end_time = t_next
                stop = True
                break
        tracker.update(t_next, p, source, events)

    nav, src, phi_meas, f0_meas, clearance = observe(end_time, nav)
    record(end_time, Vec2(0.0, 0.0), float(y[2]), src, phi_meas, f0_meas, clearance, nav)

    summary = RunSummary(
        final_time=end_time,
        final_position=p,
        final_distance=p.distance_to(source.position(end_time)),
        min_clearance=min_clearance,
        path_length=path_length,
        ticks=steps,
        converged=tracker.converged,
        collided=collided,
        known_count=len(nav.known_ids),
    )
    return RunResult(trajectory=samples, events=events, summary=summary)


def scenario_with_param(scenario: Scenario, name: str, value: float) -> Scenario:
    """Copy of the scenario with one controller parameter or the inflation replaced."""
    esc_fields = ("omega", "alpha", "gain", "hpf_cutoff", "sample_rate", "v_max")
    if name in esc_fields:
        return replace(scenario, esc=replace(scenario.esc, **{name: value}))
    if name == "inflation":
        world = scenario.world
        new_world = World(
            workspace_center=world.workspace_center,
            workspace_radius=world.workspace_radius,
            obstacles=tuple(replace(ob, inflation=value) for ob in world.obstacles),
        )
        return replace(scenario, world=new_world)
    raise ScenarioError(
        f"unknown sweep parameter {name!r}; expected one of {esc_fields + ('inflation',)}"
    )
