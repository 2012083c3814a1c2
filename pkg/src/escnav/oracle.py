"""Independent verification machinery for the closed loop.

Everything here is deliberately separate from the controller path: reference
flows are integrated from the *analytic* potential gradient, derivatives are
cross-checked by central differences, and the boundary-repulsion inequality
is evaluated both from its bilinear form and from its closed form so the two
routes can be compared.

The averaged flow is the slow system

    p' = -c * [I + r*J] * grad(p),   c = alpha*omega*gain / (2*(h^2 + omega^2)),
                                     r = h / omega,

with J the 2x2 skew matrix [[0, 1], [-1, 0]].  The full dithered loop stays
within O(alpha*gain/omega) of it after the filter's initial transient, which
is what :func:`deviation` quantifies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .esc import EscParams, continuous_rhs
from .integrate import rk4_step
from .potential import NavFunction, int_pow
from .world import Vec2

__all__ = [
    "OracleError",
    "FlowTrajectory",
    "DeviationReport",
    "BoundaryRepulsion",
    "finite_diff",
    "gradient_flow",
    "averaged_flow",
    "averaged_coefficients",
    "esc_flow",
    "deviation",
    "repulsion_check",
]

# time-constant multiple excluded as the filter's initial layer: after 5/h
# seconds the transient has decayed to under one percent
INITIAL_LAYER_CONSTANTS = 5.0


class OracleError(AssertionError):
    """An oracle cross-check failed."""


@dataclass(frozen=True)
class FlowTrajectory:
    """Times and positions sampled along an integrated flow."""

    times: np.ndarray
    points: np.ndarray  # shape (n, 2)

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.points.shape != (self.times.size, 2):
            raise ValueError("times must be (n,), points (n, 2)")

    @property
    def final_point(self) -> Vec2:
        return Vec2(float(self.points[-1, 0]), float(self.points[-1, 1]))


@dataclass(frozen=True)
class DeviationReport:
    """Max/mean pointwise distance between two flows past the initial layer."""

    max_dev: float
    mean_dev: float
    horizon: float
    epsilon: float

    def __post_init__(self) -> None:
        if not (self.max_dev >= self.mean_dev >= 0.0):
            raise ValueError(
                f"need max_dev >= mean_dev >= 0, got {self.max_dev}, {self.mean_dev}"
            )

    def as_dict(self) -> dict:
        return {
            "max_dev": self.max_dev,
            "mean_dev": self.mean_dev,
            "horizon": self.horizon,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True, slots=True)
class BoundaryRepulsion:
    """Outward rate of the obstacle product at one boundary sample.

    ``direct`` contracts the obstacle-product gradient with the averaged
    field built from the full analytic potential gradient; ``closed`` is the
    boundary-specialized closed form gain * |grad_b|^2 / (k * f^k) (times the
    averaged coefficient); ``skew_term`` is the pure skew contraction, which
    cancels identically.
    """

    obstacle_id: int
    point: Vec2
    direct: float
    closed: float
    skew_term: float


def finite_diff(field: Callable[[Vec2], float], p: Vec2, step: float) -> Vec2:
    """Central-difference gradient of a scalar field at an interior point."""
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    gx = (field(Vec2(p.x + step, p.y)) - field(Vec2(p.x - step, p.y))) / (2.0 * step)
    gy = (field(Vec2(p.x, p.y + step)) - field(Vec2(p.x, p.y - step))) / (2.0 * step)
    return Vec2(gx, gy)


def _integrate_planar(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    start: Vec2,
    duration: float,
    step: float,
) -> FlowTrajectory:
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    if duration < 0.0:
        raise ValueError(f"duration must be >= 0, got {duration!r}")
    n_full = int(math.floor(duration / step + 1e-9))
    tail = duration - n_full * step
    if tail < 1e-12 * max(1.0, duration):
        tail = 0.0
    times = [0.0]
    points = [(start.x, start.y)]
    y = np.array([start.x, start.y], dtype=float)
    for i in range(n_full):
        y, _ = rk4_step(rhs, i * step, y, step)
        times.append((i + 1) * step)
        points.append((float(y[0]), float(y[1])))
    if tail > 0.0:
        y, _ = rk4_step(rhs, n_full * step, y, tail)
        times.append(duration)
        points.append((float(y[0]), float(y[1])))
    return FlowTrajectory(times=np.array(times), points=np.array(points))


def gradient_flow(
    nav: NavFunction,
    start: Vec2,
    duration: float,
    step: float,
    frozen_t: float = 0.0,
) -> FlowTrajectory:
    """RK4 integration of the exact descent p' = -grad(p).

    This is the collision-free reference the dithered loop is compared
    against.  The source is frozen at ``frozen_t``.
    """
    if nav.k < 1:
        raise ValueError("gradient_flow requires order k >= 1")

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        g = nav.gradient(Vec2(float(y[0]), float(y[1])), frozen_t)
        return np.array([-g.x, -g.y])

    return _integrate_planar(rhs, start, duration, step)


def averaged_coefficients(params: EscParams) -> tuple[float, float]:
    """(scale, skew ratio) of the averaged field per unit of dither phase.

    The averaging is carried out on the phase clock tau = omega*t, where the
    slow field is -scale * [I + ratio*J] * grad with
    scale = alpha*omega*gain / (2*(h^2 + omega^2)) and ratio = h/omega.
    Integrating in seconds multiplies the field by a further omega (one
    second spans omega units of phase), which :func:`averaged_flow` does.
    """
    denom = 2.0 * (params.hpf_cutoff**2 + params.omega**2)
    scale = params.alpha * params.omega * params.gain / denom
    return scale, params.hpf_cutoff / params.omega


def averaged_flow(
    nav: NavFunction,
    params: EscParams,
    start: Vec2,
    duration: float,
    step: float,
    frozen_t: float = 0.0,
) -> FlowTrajectory:
    """RK4 integration of the averaged (slow) closed-loop dynamics.

    ``duration`` and ``step`` are in seconds: the phase-clock field from
    :func:`averaged_coefficients` is rescaled by omega accordingly.
    """
    if nav.k < 1:
        raise ValueError("averaged_flow requires order k >= 1")
    phase_scale, ratio = averaged_coefficients(params)
    scale = phase_scale * params.omega

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        g = nav.gradient(Vec2(float(y[0]), float(y[1])), frozen_t)
        return np.array(
            [-scale * (g.x + ratio * g.y), -scale * (g.y - ratio * g.x)]
        )

    return _integrate_planar(rhs, start, duration, step)


def esc_flow(
    nav: NavFunction,
    params: EscParams,
    start: Vec2,
    duration: float,
    step: float,
    frozen_t: float = 0.0,
) -> FlowTrajectory:
    """RK4 integration of the full coupled dither loop (unsaturated).

    The filter state is initialized to the first probe measurement.  Analysis
    companion to :func:`averaged_flow`; the simulation module provides the
    same dynamics with events and sensing.
    """
    def phi_eval(p: Vec2, _t: float) -> float:
        return nav.value(p, frozen_t)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        dp, deta = continuous_rhs(Vec2(float(y[0]), float(y[1])), float(y[2]), t, params, phi_eval)
        return np.array([dp.x, dp.y, deta])

    # z(0) = (0, -1): the first probe sits straight below the start
    eta0 = phi_eval(Vec2(start.x, start.y - params.alpha), 0.0)
    n_full = int(math.floor(duration / step + 1e-9))
    tail = duration - n_full * step
    if tail < 1e-12 * max(1.0, duration):
        tail = 0.0
    times = [0.0]
    points = [(start.x, start.y)]
    y = np.array([start.x, start.y, eta0], dtype=float)
    for i in range(n_full):
        y, _ = rk4_step(rhs, i * step, y, step)
        times.append((i + 1) * step)
        points.append((float(y[0]), float(y[1])))
    if tail > 0.0:
        y, _ = rk4_step(rhs, n_full * step, y, tail)
        times.append(duration)
        points.append((float(y[0]), float(y[1])))
    return FlowTrajectory(times=np.array(times), points=np.array(points))


def deviation(
    full: FlowTrajectory,
    avg: FlowTrajectory,
    *,
    hpf_cutoff: float,
    epsilon: float,
) -> DeviationReport:
    """Pointwise distance between two flows, excluding the initial layer.

    Both flows are linearly resampled onto the finer of the two time grids,
    restricted to t >= 5/hpf_cutoff where the filter transient has died out.
    """
    layer = INITIAL_LAYER_CONSTANTS / hpf_cutoff
    t_end = min(float(full.times[-1]), float(avg.times[-1]))
    grid_src = full.times if full.times.size >= avg.times.size else avg.times
    grid = grid_src[(grid_src >= layer) & (grid_src <= t_end)]
    if grid.size == 0:
        raise ValueError(
            f"no overlap past the initial layer (layer {layer}, common horizon {t_end})"
        )
    fx = np.interp(grid, full.times, full.points[:, 0])
    fy = np.interp(grid, full.times, full.points[:, 1])
    ax = np.interp(grid, avg.times, avg.points[:, 0])
    ay = np.interp(grid, avg.times, avg.points[:, 1])
    dist = np.hypot(fx - ax, fy - ay)
    return DeviationReport(
        max_dev=float(dist.max()),
        mean_dev=float(dist.mean()),
        horizon=float(grid[-1] - grid[0]),
        epsilon=epsilon,
    )


def repulsion_check(
    nav: NavFunction,
    params: EscParams,
    n_samples: int,
    frozen_t: float = 0.0,
) -> list[BoundaryRepulsion]:
    """Verify the averaged field points out of every known obstacle surface.

    Samples ``n_samples`` points by angle on each inflated obstacle boundary,
    where the obstacle product vanishes, and evaluates the product's outward
    rate along the averaged field two ways: contracting its gradient with the
    field built from the full analytic potential gradient, and through the
    boundary closed form.  Raises :class:`OracleError` unless the two agree
    to 1e-8 relative and their sign matches the loop gain's sign.  Boundary
    points that coincide with the source are skipped with a warning.
    """
    if nav.k < 1:
        raise ValueError("repulsion_check requires order k >= 1")
    if nav.known_ids != nav.world.obstacle_ids:
        raise ValueError("repulsion_check requires every obstacle to be known")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples!r}")
    scale, ratio = averaged_coefficients(params)
    results: list[BoundaryRepulsion] = []
    for ob in nav.world.obstacles:
        r = ob.effective_radius
        for j in range(n_samples):
            theta = 2.0 * math.pi * j / n_samples
            point = Vec2(ob.center.x + r * math.cos(theta), ob.center.y + r * math.sin(theta))
            f = nav.source.value(point, frozen_t)
            if f == 0.0:
                warnings.warn(
                    f"source sits on obstacle {ob.id} boundary at ({point.x}, {point.y}); "
                    "sample skipped",
                    stacklevel=2,
                )
                continue
            gphi = nav.gradient(point, frozen_t)
            gb = nav.world.grad_beta_product(nav.known_ids, point)
            # [I + ratio*J] g with J = [[0, 1], [-1, 0]]
            rot_x = gphi.x + ratio * gphi.y
            rot_y = gphi.y - ratio * gphi.x
            direct = -scale * (gb.x * rot_x + gb.y * rot_y)
            closed = scale * (gb.x * gb.x + gb.y * gb.y) / (nav.k * int_pow(f, nav.k))
            skew = gb.x * gb.y - gb.y * gb.x
            sample = BoundaryRepulsion(
                obstacle_id=ob.id, point=point, direct=direct, closed=closed, skew_term=skew
            )
            denom = max(abs(direct), abs(closed))
            if denom > 0.0 and abs(direct - closed) > 1e-8 * denom:
                raise OracleError(
                    f"boundary rate mismatch at obstacle {ob.id}, angle {theta}: "
                    f"direct {direct} vs closed {closed}"
                )
            if params.gain > 0.0 and not (direct > 0.0 and closed > 0.0):
                raise OracleError(
                    f"boundary rate not strictly positive at obstacle {ob.id}: {direct}, {closed}"
                )
            if params.gain < 0.0 and not (direct < 0.0 and closed < 0.0):
                raise OracleError(
                    f"boundary rate not strictly negative at obstacle {ob.id}: {direct}, {closed}"
                )
            results.append(sample)
    return results
