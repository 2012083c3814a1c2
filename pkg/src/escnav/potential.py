"""The source potential and the navigation potential built on top of it.

The source induces an anisotropic quadratic bowl whose minimum can move along
a waypoint schedule.  The navigation value combines that bowl with the
obstacle product b of the world:

    value = f / (f^k + b)^(1/k)          once at least order k >= 1 is set,
    value = s*f / (s*f + b0)             in the k = 0 bootstrap phase,

where f is the source potential, b0 the bare workspace factor and s a small
bootstrap scale.  The value lives in [0, 1], vanishes exactly at the source
and equals 1 on the zero set of the obstacle product, so its negative
gradient both descends toward the source and turns away from known obstacle
surfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .world import GeometryError, Vec2, World

__all__ = [
    "OutsideFreeSpaceError",
    "Waypoint",
    "SourcePotential",
    "NavFunction",
    "int_pow",
]


class OutsideFreeSpaceError(ValueError):
    """Evaluation point lies outside the known free space.

    Raised when the obstacle product is negative at the query point, i.e. the
    point sits inside a known inflated obstacle or beyond the workspace rim.
    Distinct from a plain ValueError so simulation bugs and collisions are
    reported unambiguously.
    """


def int_pow(x: float, k: int) -> float:
    """x**k for integer k >= 0 by exponentiation-by-squaring.

    Used for the f^k term so tiny source values underflow predictably instead
    of routing through the transcendental pow.
    """
    if k < 0:
        raise ValueError("int_pow expects k >= 0")
    result = 1.0
    base = x
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


@dataclass(frozen=True, slots=True)
class Waypoint:
    """Schedule entry: stay at ``position`` until ``hold_until`` seconds."""

    position: Vec2
    hold_until: float = 0.0

    def __post_init__(self) -> None:
        if math.isnan(self.hold_until) or self.hold_until < 0.0:
            raise ValueError(f"hold_until must be >= 0, got {self.hold_until!r}")


@dataclass(frozen=True)
class SourcePotential:
    """Quadratic potential q_x*(x - x_s)^2 + q_y*(y - y_s)^2 with a moving minimum.

    The minimum starts at the first waypoint, holds there until that
    waypoint's ``hold_until``, then travels to the next waypoint in straight
    lines at ``speed`` (m/s), holding at each waypoint until the later of its
    ``hold_until`` and the arrival time.  It stays at the last waypoint
    forever, so a single-entry schedule is a static source.
    """

    q: Vec2
    schedule: tuple[Waypoint, ...]
    speed: float = 0.0

    def __post_init__(self) -> None:
        if self.q.x <= 0.0 or self.q.y <= 0.0:
            raise ValueError(f"curvature weights must be positive, got {self.q}")
        if not self.schedule:
            raise ValueError("schedule must contain at least one waypoint")
        if len(self.schedule) > 1 and not (math.isfinite(self.speed) and self.speed > 0.0):
            raise ValueError("a multi-waypoint schedule needs a positive speed")

    @classmethod
    def static(cls, q: Vec2, position: Vec2) -> "SourcePotential":
        return cls(q=q, schedule=(Waypoint(position),))

    @property
    def final_position(self) -> Vec2:
        return self.schedule[-1].position

    def position(self, t: float) -> Vec2:
        """Minimum location at time ``t`` (piecewise linear, continuous)."""
        current = self.schedule[0]
        depart = current.hold_until
        for nxt in self.schedule[1:]:
            if t <= depart:
                return current.position
            length = current.position.distance_to(nxt.position)
            arrive = depart + (length / self.speed if length > 0.0 else 0.0)
            if t < arrive:
                frac = (t - depart) * self.speed / length
                return Vec2(
                    current.position.x + frac * (nxt.position.x - current.position.x),
                    current.position.y + frac * (nxt.position.y - current.position.y),
                )
            current = nxt
            depart = max(nxt.hold_until, arrive)
        return current.position

    def value(self, p: Vec2, t: float = 0.0) -> float:
        s = self.position(t)
        dx = p.x - s.x
        dy = p.y - s.y
        return self.q.x * dx * dx + self.q.y * dy * dy

    def gradient(self, p: Vec2, t: float = 0.0) -> Vec2:
        s = self.position(t)
        return Vec2(2.0 * self.q.x * (p.x - s.x), 2.0 * self.q.y * (p.y - s.y))


@dataclass(frozen=True)
class NavFunction:
    """Navigation potential over the obstacles discovered so far.

    A value type: :meth:`discover` returns a new instance.  In discovery mode
    the order ``k`` grows by one per newly known obstacle, starting from the
    k = 0 bootstrap; in fixed-k mode discoveries extend the known set but
    leave the order alone.
    """

    world: World
    source: SourcePotential
    k: int
    known_ids: frozenset[int] = frozenset()
    discovery: bool = False
    bootstrap_scale: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "known_ids", frozenset(self.known_ids))
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 0:
            raise ValueError(f"order k must be an integer >= 0, got {self.k!r}")
        if not self.known_ids <= self.world.obstacle_ids:
            raise GeometryError(
                f"unknown obstacle ids: {sorted(self.known_ids - self.world.obstacle_ids)}"
            )
        if self.discovery and self.known_ids and self.k < 1:
            raise ValueError("discovery mode requires k >= 1 once obstacles are known")
        if not (math.isfinite(self.bootstrap_scale) and self.bootstrap_scale > 0.0):
            raise ValueError(f"bootstrap_scale must be positive, got {self.bootstrap_scale!r}")

    # -- evaluation ----------------------------------------------------------

    def _obstacle_product(self, p: Vec2, known) -> float:
        """Obstacle product at p; tiny negatives within roundoff of a
        boundary are clamped to zero, genuine violations raise."""
        b = self.world.beta_product(known, p)
        if b >= 0.0:
            return b
        if -b <= 4.0 * self.world.beta_roundoff_bound(known, p):
            return 0.0
        raise OutsideFreeSpaceError(
            f"point ({p.x}, {p.y}) is inside a known inflated obstacle "
            f"or outside the workspace (obstacle product {b})"
        )

    def value(self, p: Vec2, t: float = 0.0) -> float:
        v, _ = self.value_with_diagnostic(p, t)
        return v

    def value_with_diagnostic(self, p: Vec2, t: float = 0.0) -> tuple[float, str | None]:
        """Potential value plus an optional diagnostic note.

        The note flags the rare numerical edge where f^k + b underflows to
        zero with f > 0; the value is then clamped to the boundary value 1.
        """
        f = self.source.value(p, t)
        if self.k == 0:
            b0 = self._obstacle_product(p, frozenset())
            den = self.bootstrap_scale * f + b0
            if den <= 0.0:
                return 1.0, "bootstrap denominator vanished; value clamped to 1"
            return min(self.bootstrap_scale * f / den, 1.0), None
        b = self._obstacle_product(p, self.known_ids)
        fk = int_pow(f, self.k)
        den = fk + b
        if den <= 0.0:
            if f > 0.0:
                return 1.0, "f^k + b underflowed to zero; value clamped to 1"
            return 1.0, "source lies on the known free-space boundary"
        # mathematically <= 1 whenever b >= 0; clamp the last-ulp wobble
        return min(f / den ** (1.0 / self.k), 1.0), None

    def gradient(self, p: Vec2, t: float = 0.0) -> Vec2:
        """Analytic gradient: (f^k + b)^(-1-1/k) * (b*grad_f - (f/k)*grad_b)."""
        f = self.source.value(p, t)
        gf = self.source.gradient(p, t)
        if self.k == 0:
            b0 = self._obstacle_product(p, frozenset())
            gb0 = self.world.grad_beta_workspace(p)
            s = self.bootstrap_scale
            den = s * f + b0
            if den <= 0.0:
                raise OutsideFreeSpaceError("bootstrap denominator vanished")
            scale = s / (den * den)
            return Vec2(scale * (b0 * gf.x - f * gb0.x), scale * (b0 * gf.y - f * gb0.y))
        b = self._obstacle_product(p, self.known_ids)
        gb = self.world.grad_beta_product(self.known_ids, p)
        fk = int_pow(f, self.k)
        den = fk + b
        if den <= 0.0:
            raise OutsideFreeSpaceError(f"f^k + b is not positive ({den}) at ({p.x}, {p.y})")
        scale = den ** (-1.0 - 1.0 / self.k)
        fac = f / self.k
        return Vec2(scale * (b * gf.x - fac * gb.x), scale * (b * gf.y - fac * gb.y))

    def in_known_free_space(self, p: Vec2) -> bool:
        return self.world.beta_product(self.known_ids, p) >= 0.0

    # -- discovery -----------------------------------------------------------

    def discover(self, newly_seen: Iterable[int]) -> "NavFunction":
        """Extend the known set; in discovery mode the order grows with it."""
        newly = frozenset(newly_seen)
        if not newly:
            return self
        overlap = newly & self.known_ids
        if overlap:
            raise ValueError(f"obstacles already known: {sorted(overlap)}")
        if not newly <= self.world.obstacle_ids:
            raise GeometryError(f"unknown obstacle ids: {sorted(newly - self.world.obstacle_ids)}")
        new_k = self.k + len(newly) if self.discovery else self.k
        return replace(self, known_ids=self.known_ids | newly, k=new_k)
