"""Versioned JSON scenario documents.

Every field is validated with a path-qualified diagnostic and unknown fields
are rejected, so a typo fails loudly instead of silently activating a
default.  Obstacles are written as (x, y, r) triples; a single inflation
margin applies to the whole world.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

from .esc import EscParams
from .potential import SourcePotential, Waypoint
from .sim import NavMode, Scenario, ScenarioError, SimMode
from .world import Vec2, World

__all__ = [
    "ScenarioFormatError",
    "SCHEMA_VERSION",
    "parse_scenario",
    "load_scenario",
    "resolve_scenario_path",
    "bundled_scenario_names",
    "load_bundled_scenario",
]

SCHEMA_VERSION = 1

# detection defaults to three obstacle radii when the file does not pin it
DEFAULT_DETECTION_FACTOR = 3.0


class ScenarioFormatError(ValueError):
    """A scenario document failed schema validation."""

    def __init__(self, message: str, where: str = "") -> None:
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


def _fail(where: str, message: str) -> None:
    raise ScenarioFormatError(message, where)


def _object(value: Any, where: str, fields: dict[str, bool]) -> dict:
    """Check mapping shape: required keys present, unknown keys rejected."""
    if not isinstance(value, dict):
        _fail(where, f"expected an object, got {type(value).__name__}")
    unknown = sorted(set(value) - set(fields))
    if unknown:
        _fail(where, f"unknown fields {unknown}; allowed: {sorted(fields)}")
    missing = sorted(k for k, required in fields.items() if required and k not in value)
    if missing:
        _fail(where, f"missing required fields {missing}")
    return value


def _number(
    value: Any,
    where: str,
    *,
    minimum: float | None = None,
    exclusive_minimum: float | None = None,
) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, f"expected a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        _fail(where, f"expected a finite number, got {value!r}")
    if minimum is not None and x < minimum:
        _fail(where, f"must be >= {minimum}, got {value!r}")
    if exclusive_minimum is not None and x <= exclusive_minimum:
        _fail(where, f"must be > {exclusive_minimum}, got {value!r}")
    return x


def _integer(value: Any, where: str, *, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(where, f"must be >= {minimum}, got {value!r}")
    return value


def _boolean(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        _fail(where, f"expected true or false, got {value!r}")
    return value


def _pair(value: Any, where: str) -> Vec2:
    if not isinstance(value, list) or len(value) != 2:
        _fail(where, f"expected a [x, y] pair, got {value!r}")
    return Vec2(_number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]"))


def _parse_world(data: Any, where: str) -> World:
    obj = _object(
        data, where, {"center": True, "radius": True, "obstacles": True, "inflation": False}
    )
    center = _pair(obj["center"], f"{where}.center")
    radius = _number(obj["radius"], f"{where}.radius", exclusive_minimum=0.0)
    inflation = _number(obj.get("inflation", 0.0), f"{where}.inflation", minimum=0.0)
    raw = obj["obstacles"]
    if not isinstance(raw, list):
        _fail(f"{where}.obstacles", f"expected a list of [x, y, r] triples, got {raw!r}")
    circles = []
    for i, entry in enumerate(raw):
        at = f"{where}.obstacles[{i}]"
        if not isinstance(entry, list) or len(entry) != 3:
            _fail(at, f"expected an [x, y, r] triple, got {entry!r}")
        circles.append(
            (
                _number(entry[0], f"{at}[0]"),
                _number(entry[1], f"{at}[1]"),
                _number(entry[2], f"{at}[2]", exclusive_minimum=0.0),
            )
        )
    try:
        return World.build(center, radius, circles, inflation=inflation)
    except ValueError as exc:
        _fail(where, str(exc))


def _parse_source(data: Any, where: str) -> SourcePotential:
    obj = _object(data, where, {"q": True, "schedule": True, "speed": False})
    q = _pair(obj["q"], f"{where}.q")
    raw = obj["schedule"]
    if not isinstance(raw, list) or not raw:
        _fail(f"{where}.schedule", "expected a non-empty list of waypoints")
    waypoints = []
    for i, entry in enumerate(raw):
        at = f"{where}.schedule[{i}]"
        wp = _object(entry, at, {"at": True, "until": False})
        waypoints.append(
            Waypoint(
                position=_pair(wp["at"], f"{at}.at"),
                hold_until=_number(wp.get("until", 0.0), f"{at}.until", minimum=0.0),
            )
        )
    speed = _number(obj.get("speed", 0.0), f"{where}.speed", minimum=0.0)
    if len(waypoints) > 1 and speed <= 0.0:
        _fail(f"{where}.speed", "a multi-waypoint schedule needs a positive speed")
    try:
        return SourcePotential(q=q, schedule=tuple(waypoints), speed=speed)
    except ValueError as exc:
        _fail(where, str(exc))


def _parse_esc(data: Any, where: str) -> EscParams:
    obj = _object(
        data,
        where,
        {
            "omega": True,
            "alpha": True,
            "gain": True,
            "hpf_cutoff": True,
            "sample_rate": False,
            "v_max": False,
        },
    )
    omega = _number(obj["omega"], f"{where}.omega", exclusive_minimum=0.0)
    sample_rate = (
        _number(obj["sample_rate"], f"{where}.sample_rate", exclusive_minimum=0.0)
        if "sample_rate" in obj
        else 10.0 * omega
    )
    v_max = math.inf
    if "v_max" in obj:
        v_max = _number(obj["v_max"], f"{where}.v_max", exclusive_minimum=0.0)
    try:
        return EscParams(
            omega=omega,
            alpha=_number(obj["alpha"], f"{where}.alpha", minimum=0.0),
            gain=_number(obj["gain"], f"{where}.gain", minimum=0.0),
            hpf_cutoff=_number(obj["hpf_cutoff"], f"{where}.hpf_cutoff", exclusive_minimum=0.0),
            sample_rate=sample_rate,
            v_max=v_max,
        )
    except ValueError as exc:
        _fail(where, str(exc))


def _parse_nav(data: Any, where: str) -> NavMode:
    if not isinstance(data, dict) or "mode" not in data:
        _fail(where, "expected an object with a 'mode' field")
    mode = data["mode"]
    if mode == "fixed":
        obj = _object(data, where, {"mode": True, "k": True})
        return NavMode.fixed(_integer(obj["k"], f"{where}.k", minimum=1))
    if mode == "discovery":
        obj = _object(data, where, {"mode": True, "bootstrap_scale": False})
        scale = _number(
            obj.get("bootstrap_scale", 0.1), f"{where}.bootstrap_scale", exclusive_minimum=0.0
        )
        return NavMode.discovery(scale)
    _fail(f"{where}.mode", f"expected 'fixed' or 'discovery', got {mode!r}")


def _parse_mode(data: Any, where: str) -> SimMode:
    if not isinstance(data, dict) or "kind" not in data:
        _fail(where, "expected an object with a 'kind' field")
    kind = data["kind"]
    if kind == "sampled":
        _object(data, where, {"kind": True})
        return SimMode.sampled()
    if kind == "continuous":
        obj = _object(data, where, {"kind": True, "step_dt": False})
        step = None
        if "step_dt" in obj:
            step = _number(obj["step_dt"], f"{where}.step_dt", exclusive_minimum=0.0)
        return SimMode.continuous(step)
    _fail(f"{where}.kind", f"expected 'sampled' or 'continuous', got {kind!r}")


def _parse_detection(data: Any, where: str, world: World) -> float:
    if data is None:
        if not world.obstacles:
            return math.inf
        return DEFAULT_DETECTION_FACTOR * max(ob.radius for ob in world.obstacles)
    if data == "inf":
        return math.inf
    return _number(data, where, minimum=0.0)


def parse_scenario(data: Any, origin: str = "scenario") -> Scenario:
    """Validate a decoded JSON document and build the Scenario it describes."""
    obj = _object(
        data,
        origin,
        {
            "version": True,
            "world": True,
            "source": True,
            "esc": True,
            "nav": True,
            "start": True,
            "duration": True,
            "mode": False,
            "detection_radius": False,
            "convergence_radius": False,
            "convergence_hold": False,
            "collision_stop": False,
        },
    )
    version = _integer(obj["version"], f"{origin}.version")
    if version != SCHEMA_VERSION:
        _fail(f"{origin}.version", f"unsupported version {version}; expected {SCHEMA_VERSION}")
    world = _parse_world(obj["world"], f"{origin}.world")
    source = _parse_source(obj["source"], f"{origin}.source")
    params = _parse_esc(obj["esc"], f"{origin}.esc")
    nav_mode = _parse_nav(obj["nav"], f"{origin}.nav")
    mode = _parse_mode(obj.get("mode", {"kind": "sampled"}), f"{origin}.mode")
    detection = _parse_detection(obj.get("detection_radius"), f"{origin}.detection_radius", world)
    if "convergence_radius" in obj:
        conv_radius = _number(
            obj["convergence_radius"], f"{origin}.convergence_radius", exclusive_minimum=0.0
        )
    else:
        conv_radius = 3.0 * params.alpha if params.alpha > 0.0 else 0.1
    conv_hold = _number(obj.get("convergence_hold", 1.0), f"{origin}.convergence_hold", minimum=0.0)
    collision_stop = _boolean(obj.get("collision_stop", True), f"{origin}.collision_stop")
    try:
        return Scenario(
            world=world,
            source=source,
            esc=params,
            nav_mode=nav_mode,
            start=_pair(obj["start"], f"{origin}.start"),
            duration=_number(obj["duration"], f"{origin}.duration", minimum=0.0),
            mode=mode,
            detection_radius=detection,
            convergence_radius=conv_radius,
            convergence_hold=conv_hold,
            collision_stop=collision_stop,
        )
    except (ScenarioError, ValueError) as exc:
        _fail(origin, str(exc))


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(str(exc), where=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", where=str(path)
        ) from exc
    return parse_scenario(data, origin=str(path))


def bundled_scenario_names() -> list[str]:
    root = resources.files("escnav").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name: str | Path) -> Path:
    """Interpret ``name`` as a file path, else as a bundled scenario name."""
    path = Path(name)
    if path.exists():
        return path
    candidate = resources.files("escnav").joinpath("scenarios", f"{name}.json")
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioFormatError(
        f"no such file, and no bundled scenario named {name!r} "
        f"(bundled: {', '.join(bundled_scenario_names())})",
        where=str(name),
    )


def load_bundled_scenario(name: str) -> Scenario:
    return load_scenario(resolve_scenario_path(name))
