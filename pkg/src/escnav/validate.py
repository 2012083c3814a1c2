"""Named verification suites driven by the oracle machinery.

Each suite returns per-check results plus any structured records worth
exporting (deviation reports, sweep tables).  All tolerances and frozen
parameters live here so the CLI and the test suite exercise the exact same
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .esc import EscParams
from .oracle import (
    DeviationReport,
    OracleError,
    averaged_flow,
    deviation,
    finite_diff,
    gradient_flow,
    repulsion_check,
)
from .potential import NavFunction, SourcePotential
from .scenario_io import load_bundled_scenario
from .sim import NavMode, Scenario, SimMode, run, scenario_with_param
from .world import Vec2, World

__all__ = ["CheckResult", "SuiteReport", "SUITE_NAMES", "run_suite"]

REFERENCE_SCENARIO = "particle_static"

GRADIENT_SEED = 20260301
GRADIENT_POINTS = 1000
GRADIENT_STEP = 1e-5
GRADIENT_RTOL = 1e-6
GRADIENT_ORDERS = (1, 3, 6)
# Stay this far from boundaries: the central-difference truncation error
# grows like (step/distance)^2 near the potential's walls, so certifying
# 1e-6 relative accuracy at step 1e-5 needs a couple of centimeters.
GRADIENT_INTERIOR_MARGIN = 0.02

REPULSION_SAMPLES = 64
REPULSION_RTOL = 1e-8
REPULSION_SKEW_TOL = 1e-12

AVERAGING_HORIZON = 30.0
AVERAGING_FACTOR_RANGE = (2.0, 8.0)

# The safety study runs a corridor world: a fence of discs across the
# workspace with one gate on the straight line from start to source, so the
# loop must graze the gate.  The base loop is aggressive enough that its
# ripple actually clips the gate when no margin is used; halving the ripple
# parameter alpha*gain/omega (via alpha, which leaves the averaged path
# unchanged) makes every margin on the grid safe.
SAFETY_FENCE = (
    (0.0, 0.4, 0.25),
    (0.0, -0.4, 0.25),
    (0.0, 1.15, 0.25),
    (0.0, -1.15, 0.25),
    (0.0, 1.9, 0.25),
    (0.0, -1.9, 0.25),
    (0.0, 2.6, 0.25),
    (0.0, -2.6, 0.25),
)
SAFETY_SOURCE = (1.8, 0.1)
SAFETY_START = (-1.8, 0.0)
SAFETY_Q = 0.3
SAFETY_ORDER = 10
SAFETY_ALPHA = 0.14
SAFETY_GAIN = 48.0
SAFETY_OMEGA = 40.0
SAFETY_HPF = 20.0
SAFETY_DURATION = 500.0
SAFETY_GRID = (0.0, 0.01, 0.02, 0.03, 0.04)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    checks: list[CheckResult]
    records: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
            **self.records,
        }


def sample_free_points(
    world: World, count: int, rng: np.random.Generator, margin: float
) -> list[Vec2]:
    """Uniform samples over the free space, kept ``margin`` off every boundary."""
    points: list[Vec2] = []
    c = world.workspace_center
    radius = world.workspace_radius - margin
    while len(points) < count:
        r = radius * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        p = Vec2(c.x + r * math.cos(theta), c.y + r * math.sin(theta))
        _, clearance = world.in_free_space(p, inflated=True)
        if clearance > margin:
            points.append(p)
    return points


def _max_relative_error(points, analytic, field) -> float:
    worst = 0.0
    for p in points:
        approx = finite_diff(field, p, GRADIENT_STEP)
        exact = analytic(p)
        scale = exact.norm()
        err = (approx - exact).norm() / scale if scale > 0.0 else (approx - exact).norm()
        if err > worst:
            worst = err
    return worst


def suite_gradients() -> SuiteReport:
    """Analytic gradients against central finite differences at random points."""
    scenario = load_bundled_scenario(REFERENCE_SCENARIO)
    world, source = scenario.world, scenario.source
    rng = np.random.default_rng(GRADIENT_SEED)
    points = sample_free_points(world, GRADIENT_POINTS, rng, GRADIENT_INTERIOR_MARGIN)
    all_ids = world.obstacle_ids
    checks = []

    err = _max_relative_error(
        points, lambda p: source.gradient(p, 0.0), lambda p: source.value(p, 0.0)
    )
    checks.append(
        CheckResult("gradients.source", err <= GRADIENT_RTOL, f"max_rel_err={err:.3e}")
    )
    err = _max_relative_error(
        points,
        lambda p: world.grad_beta_product(all_ids, p),
        lambda p: world.beta_product(all_ids, p),
    )
    checks.append(
        CheckResult("gradients.obstacle_product", err <= GRADIENT_RTOL, f"max_rel_err={err:.3e}")
    )
    for k in GRADIENT_ORDERS:
        nav = NavFunction(world=world, source=source, k=k, known_ids=all_ids)
        err = _max_relative_error(
            points, lambda p: nav.gradient(p, 0.0), lambda p: nav.value(p, 0.0)
        )
        checks.append(
            CheckResult(f"gradients.potential_k{k}", err <= GRADIENT_RTOL, f"max_rel_err={err:.3e}")
        )
    return SuiteReport("gradients", checks, {"points": len(points), "step": GRADIENT_STEP})


def suite_repulsion() -> SuiteReport:
    """Boundary repulsion: bilinear form vs closed form on every obstacle."""
    scenario = load_bundled_scenario(REFERENCE_SCENARIO)
    nav = NavFunction(
        world=scenario.world,
        source=scenario.source,
        k=scenario.nav_mode.k,
        known_ids=scenario.world.obstacle_ids,
    )
    checks = []
    try:
        records = repulsion_check(nav, scenario.esc, REPULSION_SAMPLES)
    except OracleError as exc:
        checks.append(CheckResult("repulsion.identity", False, str(exc)))
        return SuiteReport("repulsion", checks, {})
    expected = REPULSION_SAMPLES * len(scenario.world.obstacles)
    rel = max(
        abs(r.direct - r.closed) / max(abs(r.direct), abs(r.closed)) for r in records
    )
    skew = max(abs(r.skew_term) for r in records)
    checks.append(
        CheckResult(
            "repulsion.identity",
            rel <= REPULSION_RTOL and len(records) == expected,
            f"samples={len(records)} max_rel_diff={rel:.3e}",
        )
    )
    checks.append(
        CheckResult(
            "repulsion.positive",
            all(r.direct > 0.0 and r.closed > 0.0 for r in records),
            f"min_rate={min(r.closed for r in records):.3e}",
        )
    )
    checks.append(
        CheckResult("repulsion.skew_cancellation", skew <= REPULSION_SKEW_TOL, f"max_skew={skew:.3e}")
    )
    return SuiteReport("repulsion", checks, {"samples_per_obstacle": REPULSION_SAMPLES})


def _deviation_for(scenario) -> DeviationReport:
    """Full dithered loop vs averaged flow for one parameter set."""
    params = scenario.esc
    nav = NavFunction(
        world=scenario.world,
        source=scenario.source,
        k=scenario.nav_mode.k,
        known_ids=scenario.world.obstacle_ids,
    )
    full = run(scenario).flow()
    avg = averaged_flow(
        nav, params, scenario.start, scenario.duration, scenario.continuous_step()
    )
    return deviation(
        full, avg, hpf_cutoff=params.hpf_cutoff, epsilon=params.alpha * params.gain / params.omega
    )


def averaging_reports() -> tuple[DeviationReport, DeviationReport]:
    """Deviation reports at the reference parameters and at epsilon/4."""
    base = load_bundled_scenario(REFERENCE_SCENARIO)
    common = replace(
        base,
        mode=SimMode.continuous(),
        duration=AVERAGING_HORIZON,
        detection_radius=math.inf,
    )
    reduced = replace(
        common,
        esc=replace(
            common.esc,
            alpha=common.esc.alpha / 2.0,
            omega=2.0 * common.esc.omega,
            sample_rate=20.0 * common.esc.omega,
        ),
    )
    return _deviation_for(common), _deviation_for(reduced)


def suite_averaging() -> SuiteReport:
    """O(epsilon) tracking of the averaged flow: quartering epsilon must
    shrink the post-layer deviation by a factor within the accepted band."""
    rep_base, rep_reduced = averaging_reports()
    factor = rep_base.max_dev / rep_reduced.max_dev if rep_reduced.max_dev > 0.0 else math.inf
    lo, hi = AVERAGING_FACTOR_RANGE
    checks = [
        CheckResult(
            "averaging.epsilon_scaling",
            lo <= factor <= hi,
            f"factor={factor:.3f} (epsilon {rep_base.epsilon:.4g} -> {rep_reduced.epsilon:.4g}, "
            f"max_dev {rep_base.max_dev:.3e} -> {rep_reduced.max_dev:.3e})",
        )
    ]
    return SuiteReport(
        "averaging",
        checks,
        {"reports": [rep_base.as_dict(), rep_reduced.as_dict()]},
    )


def safety_scenario(alpha_factor: float) -> Scenario:
    """Gate-corridor world under an aggressive loop.

    ``alpha_factor`` scales the dither amplitude and with it the ripple
    parameter alpha*gain/omega, while the averaged path stays the same.
    """
    world = World.build(Vec2(0.0, 0.0), 3.0, SAFETY_FENCE, inflation=0.0)
    return Scenario(
        world=world,
        source=SourcePotential.static(Vec2(SAFETY_Q, SAFETY_Q), Vec2(*SAFETY_SOURCE)),
        esc=EscParams(
            omega=SAFETY_OMEGA,
            alpha=SAFETY_ALPHA * alpha_factor,
            gain=SAFETY_GAIN,
            hpf_cutoff=SAFETY_HPF,
            sample_rate=10.0 * SAFETY_OMEGA,
            v_max=math.inf,
        ),
        nav_mode=NavMode.fixed(SAFETY_ORDER),
        start=Vec2(*SAFETY_START),
        duration=SAFETY_DURATION,
        detection_radius=math.inf,
        convergence_radius=0.21,
        convergence_hold=2.0,
    )


def safety_sweep(alpha_factor: float) -> list[dict]:
    scenario = safety_scenario(alpha_factor)
    rows = []
    for margin in SAFETY_GRID:
        result = run(scenario_with_param(scenario, "inflation", margin))
        rows.append(
            {
                "inflation": margin,
                "min_clearance": result.summary.min_clearance,
                "collided": result.summary.collided,
            }
        )
    return rows


def smallest_safe_inflation(rows: list[dict]) -> float:
    for row in rows:
        if not row["collided"]:
            return row["inflation"]
    return math.inf


def suite_safety() -> SuiteReport:
    """Safety-guard study: more margin never hurts, and the needed margin
    shrinks when the ripple parameter alpha*gain/omega is halved."""
    rows_base = safety_sweep(1.0)
    rows_reduced = safety_sweep(0.5)
    checks = []
    for label, rows in (("base", rows_base), ("half_epsilon", rows_reduced)):
        clear = [row["min_clearance"] for row in rows]
        monotone = all(a <= b + 1e-15 for a, b in zip(clear, clear[1:]))
        checks.append(
            CheckResult(
                f"safety.monotone_clearance.{label}",
                monotone,
                "clearances=" + ",".join(f"{c:.4f}" for c in clear),
            )
        )
    threshold_base = smallest_safe_inflation(rows_base)
    threshold_reduced = smallest_safe_inflation(rows_reduced)
    checks.append(
        CheckResult(
            "safety.threshold_shrinks",
            threshold_reduced < threshold_base,
            f"threshold {threshold_base} -> {threshold_reduced} when epsilon halves",
        )
    )
    return SuiteReport(
        "safety",
        checks,
        {
            "grid": list(SAFETY_GRID),
            "base": rows_base,
            "half_epsilon": rows_reduced,
            "thresholds": {"base": threshold_base, "half_epsilon": threshold_reduced},
        },
    )


def gradient_flow_reference(duration: float = 120.0, step: float = 0.005):
    """Exact-gradient descent on the reference world (safety cross-check)."""
    scenario = load_bundled_scenario(REFERENCE_SCENARIO)
    nav = NavFunction(
        world=scenario.world,
        source=scenario.source,
        k=scenario.nav_mode.k,
        known_ids=scenario.world.obstacle_ids,
    )
    return scenario, nav, gradient_flow(nav, scenario.start, duration, step)


SUITES = {
    "gradients": suite_gradients,
    "averaging": suite_averaging,
    "repulsion": suite_repulsion,
    "safety": suite_safety,
}
SUITE_NAMES = tuple(sorted(SUITES))


def run_suite(name: str) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {', '.join(SUITE_NAMES)}")
    return SUITES[name]()
