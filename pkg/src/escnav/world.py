"""Planar worlds: a circular workspace containing disjoint circular obstacles.

Each obstacle carries a quadratic function that is negative inside it, zero on
its surface and positive outside; the workspace contributes the mirrored
factor (positive inside, zero on the rim).  The product of these factors over
the currently known obstacles is what the navigation potential is built from,
so its evaluation order is fixed (workspace first, then obstacles by
ascending id) to keep results bit-reproducible.

Obstacles are stored with an ``inflation`` margin: the inflated disc is the
*virtual* obstacle the potential reasons about, while collision queries use
the true radius.  Keeping the two radii separate is what lets a caller verify
that a chosen safety margin is actually large enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

__all__ = ["GeometryError", "Vec2", "Obstacle", "World", "WORKSPACE_ID"]

# id reserved for the workspace boundary in collision reports; obstacle ids
# therefore start at 1.
WORKSPACE_ID = 0


class GeometryError(ValueError):
    """A geometric object violated its construction invariants."""


@dataclass(frozen=True, slots=True)
class Vec2:
    """Planar vector in meters; coordinates are always finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinates ({self.x!r}, {self.y!r})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __mul__(self, scalar: float) -> "Vec2":
        return Vec2(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Obstacle:
    """Circular obstacle with a virtual inflation margin.

    ``radius`` is the physical radius used for collision tests;
    ``radius + inflation`` is the effective radius seen by the potential.
    """

    id: int
    center: Vec2
    radius: float
    inflation: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.id, int) or isinstance(self.id, bool) or self.id < 1:
            raise GeometryError(f"obstacle id must be an integer >= 1, got {self.id!r}")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise GeometryError(f"obstacle {self.id}: radius must be positive, got {self.radius!r}")
        if not (math.isfinite(self.inflation) and self.inflation >= 0.0):
            raise GeometryError(f"obstacle {self.id}: inflation must be >= 0, got {self.inflation!r}")

    @property
    def effective_radius(self) -> float:
        return self.radius + self.inflation

    def beta(self, p: Vec2) -> float:
        """Quadratic obstacle function |p - c|^2 - r_eff^2 (inflated radius)."""
        dx = p.x - self.center.x
        dy = p.y - self.center.y
        r = self.radius + self.inflation
        return dx * dx + dy * dy - r * r

    def grad_beta(self, p: Vec2) -> Vec2:
        return Vec2(2.0 * (p.x - self.center.x), 2.0 * (p.y - self.center.y))

    def surface_distance(self, p: Vec2, *, inflated: bool = False) -> float:
        """Signed distance to the disc surface; negative inside."""
        r = self.effective_radius if inflated else self.radius
        return math.hypot(p.x - self.center.x, p.y - self.center.y) - r


@dataclass(frozen=True)
class World:
    """Circular workspace with pairwise-disjoint inflated obstacles inside it."""

    workspace_center: Vec2
    workspace_radius: float
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self) -> None:
        if not (math.isfinite(self.workspace_radius) and self.workspace_radius > 0.0):
            raise GeometryError(f"workspace radius must be positive, got {self.workspace_radius!r}")
        obstacles = tuple(sorted(self.obstacles, key=lambda ob: ob.id))
        object.__setattr__(self, "obstacles", obstacles)
        ids = [ob.id for ob in obstacles]
        if len(set(ids)) != len(ids):
            raise GeometryError(f"duplicate obstacle ids: {ids}")
        for ob in obstacles:
            reach = ob.center.distance_to(self.workspace_center) + ob.effective_radius
            if reach >= self.workspace_radius:
                raise GeometryError(
                    f"obstacle {ob.id} (inflated) is not strictly inside the workspace "
                    f"(reach {reach} >= radius {self.workspace_radius})"
                )
        for i, a in enumerate(obstacles):
            for b in obstacles[i + 1 :]:
                gap = a.center.distance_to(b.center) - a.effective_radius - b.effective_radius
                if gap <= 0.0:
                    raise GeometryError(
                        f"obstacles {a.id} and {b.id} intersect under inflated radii (gap {gap})"
                    )

    @classmethod
    def build(
        cls,
        center: Vec2,
        radius: float,
        circles: Iterable[tuple[float, float, float]],
        inflation: float = 0.0,
    ) -> "World":
        """Build a world from (x, y, r) triples; ids are assigned 1..n in order.

        ``inflation`` is a single margin applied to every obstacle.
        """
        obstacles = tuple(
            Obstacle(id=i + 1, center=Vec2(x, y), radius=r, inflation=inflation)
            for i, (x, y, r) in enumerate(circles)
        )
        return cls(workspace_center=center, workspace_radius=radius, obstacles=obstacles)

    @property
    def obstacle_ids(self) -> frozenset[int]:
        return frozenset(ob.id for ob in self.obstacles)

    def obstacle(self, oid: int) -> Obstacle:
        for ob in self.obstacles:
            if ob.id == oid:
                return ob
        raise KeyError(f"no obstacle with id {oid}")

    # -- obstacle functions -------------------------------------------------

    def beta_workspace(self, p: Vec2) -> float:
        """Workspace factor R^2 - |p - c|^2: positive inside, zero on the rim."""
        dx = p.x - self.workspace_center.x
        dy = p.y - self.workspace_center.y
        return self.workspace_radius * self.workspace_radius - dx * dx - dy * dy

    def grad_beta_workspace(self, p: Vec2) -> Vec2:
        return Vec2(
            -2.0 * (p.x - self.workspace_center.x),
            -2.0 * (p.y - self.workspace_center.y),
        )

    def _known(self, known_ids: Iterable[int]) -> frozenset[int]:
        known = known_ids if isinstance(known_ids, frozenset) else frozenset(known_ids)
        if not known <= self.obstacle_ids:
            raise GeometryError(f"unknown obstacle ids: {sorted(known - self.obstacle_ids)}")
        return known

    def beta_product(self, known_ids: Iterable[int], p: Vec2) -> float:
        """Product of the workspace factor and the known obstacles' functions.

        Evaluated workspace-first, obstacles in ascending id order, so the
        result is independent of how ``known_ids`` was ordered.
        """
        known = self._known(known_ids)
        product = self.beta_workspace(p)
        for ob in self.obstacles:
            if ob.id in known:
                product *= ob.beta(p)
        return product

    def beta_roundoff_bound(self, known_ids: Iterable[int], p: Vec2) -> float:
        """Upper bound on the floating-point rounding error of beta_product.

        Each factor f_j carries an absolute error of order eps * s_j, where
        s_j is the magnitude of the squared terms it subtracts; the product's
        error is bounded by sum_j (prod_{l != j} |f_l|) * eps * s_j.  Used to
        recognize points that sit on a boundary up to roundoff, where the
        computed product may come out as a tiny negative number.
        """
        eps = 2.220446049250313e-16
        known = self._known(known_ids)
        dx = p.x - self.workspace_center.x
        dy = p.y - self.workspace_center.y
        r2 = self.workspace_radius * self.workspace_radius
        mags = [abs(r2 - dx * dx - dy * dy)]
        scales = [r2 + dx * dx + dy * dy]
        for ob in self.obstacles:
            if ob.id in known:
                mags.append(abs(ob.beta(p)))
                ex = p.x - ob.center.x
                ey = p.y - ob.center.y
                reff = ob.effective_radius
                scales.append(ex * ex + ey * ey + reff * reff)
        bound = 0.0
        for j, scale in enumerate(scales):
            others = 1.0
            for l, mag in enumerate(mags):
                if l != j:
                    others *= mag
            bound += others * eps * scale
        return bound

    def grad_beta_product(self, known_ids: Iterable[int], p: Vec2) -> Vec2:
        """Analytic gradient of :meth:`beta_product` by the product rule."""
        known = self._known(known_ids)
        factors = [self.beta_workspace(p)]
        grads = [self.grad_beta_workspace(p)]
        for ob in self.obstacles:
            if ob.id in known:
                factors.append(ob.beta(p))
                grads.append(ob.grad_beta(p))
        n = len(factors)
        # prefix[j] = product of factors before j, suffix[j] = product after j
        prefix = [1.0] * n
        for j in range(1, n):
            prefix[j] = prefix[j - 1] * factors[j - 1]
        suffix = [1.0] * n
        for j in range(n - 2, -1, -1):
            suffix[j] = suffix[j + 1] * factors[j + 1]
        gx = 0.0
        gy = 0.0
        for j in range(n):
            w = prefix[j] * suffix[j]
            gx += w * grads[j].x
            gy += w * grads[j].y
        return Vec2(gx, gy)

    # -- membership ---------------------------------------------------------

    def in_free_space(self, p: Vec2, *, inflated: bool = False) -> tuple[bool, float]:
        """Whether ``p`` is inside the workspace and outside every obstacle.

        Returns ``(free, clearance)`` where clearance is the smallest margin
        over the workspace rim and all obstacle surfaces (negative when
        violated).  By default the *true* radii are used, which makes this
        the physical collision test; pass ``inflated=True`` to query the
        virtual free space seen by the potential.
        """
        clearance = self.workspace_radius - p.distance_to(self.workspace_center)
        for ob in self.obstacles:
            margin = ob.surface_distance(p, inflated=inflated)
            if margin < clearance:
                clearance = margin
        return clearance >= 0.0, clearance
