"""Two-axis sinusoidal extremum-seeking controller.

The controller dithers the measurement point around the commanded position
with the modulation vector z(u) = (sin u, -cos u), washes the slow component
out of the scalar measurement with a one-state high-pass filter, and feeds
the demodulated residual back as a velocity command:

    command = -gain * z(omega*t) * (measurement - eta)
    eta'    = hpf_cutoff * (measurement - eta)

In sampled mode the filter state advances with the exact zero-order-hold
solution of that linear filter and the command is saturated per axis; the
continuous right-hand side is exposed separately (unsaturated) for analysis
integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .world import Vec2

__all__ = [
    "EscParams",
    "EscState",
    "modulation",
    "perturbation",
    "hpf_step",
    "esc_step",
    "continuous_rhs",
]


@dataclass(frozen=True, slots=True)
class EscParams:
    """Controller tuple: dither, filter, gain, tick rate and speed limit.

    ``sample_rate`` is the controller tick frequency in rad/s (ticks happen
    every 2*pi/sample_rate seconds) and must satisfy the Nyquist floor
    sample_rate >= 2*omega.  The textbook separation omega > hpf_cutoff is
    *not* enforced -- practical loops violate it -- but
    :meth:`assumption_warnings` reports the violation.
    """

    omega: float
    alpha: float
    gain: float
    hpf_cutoff: float
    sample_rate: float
    v_max: float = math.inf

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega) and self.omega > 0.0):
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not math.isfinite(self.gain):
            raise ValueError(f"gain must be finite, got {self.gain!r}")
        if not (math.isfinite(self.hpf_cutoff) and self.hpf_cutoff > 0.0):
            raise ValueError(f"hpf_cutoff must be positive, got {self.hpf_cutoff!r}")
        if not (math.isfinite(self.sample_rate) and self.sample_rate >= 2.0 * self.omega):
            raise ValueError(
                f"sample_rate must be >= 2*omega = {2.0 * self.omega}, got {self.sample_rate!r}"
            )
        if math.isnan(self.v_max) or self.v_max <= 0.0:
            raise ValueError(f"v_max must be positive, got {self.v_max!r}")

    @classmethod
    def with_default_rate(
        cls,
        omega: float,
        alpha: float,
        gain: float,
        hpf_cutoff: float,
        v_max: float = math.inf,
    ) -> "EscParams":
        """Standard discretization: ticks at ten times the dither frequency."""
        return cls(
            omega=omega,
            alpha=alpha,
            gain=gain,
            hpf_cutoff=hpf_cutoff,
            sample_rate=10.0 * omega,
            v_max=v_max,
        )

    @property
    def tick_dt(self) -> float:
        return 2.0 * math.pi / self.sample_rate

    @property
    def epsilon(self) -> float:
        """Small parameter alpha*|gain|/omega governing trajectory ripple."""
        return self.alpha * abs(self.gain) / self.omega

    def assumption_warnings(self) -> list[str]:
        notes = []
        if self.omega <= self.hpf_cutoff:
            notes.append(
                f"dither frequency omega={self.omega} does not exceed the washout "
                f"cutoff hpf_cutoff={self.hpf_cutoff}; convergence guarantees assume "
                "hpf_cutoff << omega"
            )
        return notes


@dataclass(slots=True)
class EscState:
    """Mutable per-run controller state.

    ``eta`` starts unset and is initialized to the first measurement, so the
    first residual is zero and there is no startup kick.
    """

    eta: float | None = None
    t: float = 0.0
    last_command: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))


def modulation(u: float) -> Vec2:
    """Orthogonal dither directions z(u) = (sin u, -cos u)."""
    return Vec2(math.sin(u), -math.cos(u))


def perturbation(params: EscParams, t: float) -> Vec2:
    """Dither offset alpha * z(omega*t); the probe sits at p + perturbation."""
    u = params.omega * t
    return Vec2(params.alpha * math.sin(u), -params.alpha * math.cos(u))


def hpf_step(eta: float, measurement: float, params: EscParams, dt: float) -> float:
    """Exact zero-order-hold update of the washout state over one tick.

    Solves eta' = hpf_cutoff * (y - eta) with y held constant for dt seconds:
    the error to y decays by exp(-hpf_cutoff * dt) exactly, so splitting dt
    into sub-steps changes nothing.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return measurement + (eta - measurement) * math.exp(-params.hpf_cutoff * dt)


def esc_step(
    state: EscState, measurement: float, params: EscParams, dt: float
) -> tuple[Vec2, bool]:
    """One controller tick; returns the saturated command and a clamp flag.

    The residual uses the filter state from *before* this tick's update, then
    eta and t advance.  That ordering makes the sampled loop converge to the
    continuous one as dt -> 0.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if state.eta is None:
        state.eta = measurement
    residual = measurement - state.eta
    u = params.omega * state.t
    vx = -params.gain * math.sin(u) * residual
    vy = params.gain * math.cos(u) * residual
    limit = params.v_max
    saturated = abs(vx) > limit or abs(vy) > limit
    if saturated:
        vx = max(-limit, min(limit, vx))
        vy = max(-limit, min(limit, vy))
    state.eta = hpf_step(state.eta, measurement, params, dt)
    state.t += dt
    state.last_command = Vec2(vx, vy)
    return state.last_command, saturated


def continuous_rhs(
    p: Vec2,
    eta: float,
    t: float,
    params: EscParams,
    phi_eval: Callable[[Vec2, float], float],
) -> tuple[Vec2, float]:
    """Exact right-hand side of the coupled position/filter loop.

    ``phi_eval`` maps (point, time) to the scalar potential; it is evaluated
    at the dithered probe point.  No saturation is applied: this is the form
    the averaging analysis assumes.
    """
    u = params.omega * t
    zx = math.sin(u)
    zy = -math.cos(u)
    probe = Vec2(p.x + params.alpha * zx, p.y + params.alpha * zy)
    residual = phi_eval(probe, t) - eta
    dp = Vec2(-params.gain * zx * residual, -params.gain * zy * residual)
    return dp, params.hpf_cutoff * residual
