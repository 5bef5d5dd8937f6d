"""Random Waypoint mobility on a disc around the gNB."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .channel import Position3D
from .engine import Engine, NS_PER_S

REGION_RADII_M = {"d1": 85.0, "d2": 170.0, "d3": 255.0}


@dataclass(frozen=True)
class Region:
    center: Position3D
    radius_m: float

    def __post_init__(self):
        if self.radius_m < 0:
            raise ValueError("region radius must be >= 0")

    @classmethod
    def named(cls, name: str | float, center: Position3D | None = None) -> "Region":
        center = center or Position3D(0.0, 0.0, 0.0)
        if isinstance(name, str):
            if name not in REGION_RADII_M:
                raise ValueError(f"unknown region {name!r}; expected d1, d2, d3 or a radius in meters")
            return cls(center, REGION_RADII_M[name])
        return cls(center, float(name))

    def contains(self, p: Position3D, tol: float = 1e-9) -> bool:
        return math.hypot(p.x - self.center.x, p.y - self.center.y) <= self.radius_m + tol


@dataclass(frozen=True)
class MobilityLeg:
    origin: Position3D
    target: Position3D
    speed_mps: float
    depart_at: int

    @property
    def length_m(self) -> float:
        return self.origin.distance_3d(self.target)

    @property
    def arrive_at(self) -> int:
        return self.depart_at + round(self.length_m / self.speed_mps * NS_PER_S)


def sample_waypoint(
    region: Region,
    rng,
    h_ut_m: float = 1.5,
    speed_range: tuple[float, float] = (0.2, 1.5),
) -> tuple[Position3D, float]:
    """Area-uniform point on the disc at terminal height, plus a uniform speed."""
    r = region.radius_m * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    speed = rng.uniform(*speed_range)
    p = Position3D(region.center.x + r * math.cos(theta), region.center.y + r * math.sin(theta), h_ut_m)
    return p, speed


def position_at(leg: MobilityLeg, t: int) -> Position3D:
    elapsed = (t - leg.depart_at) / NS_PER_S
    if elapsed <= 0:
        return leg.origin
    length = leg.length_m
    travelled = leg.speed_mps * elapsed
    if travelled >= length:
        return leg.target
    f = travelled / length
    o, g = leg.origin, leg.target
    return Position3D(o.x + f * (g.x - o.x), o.y + f * (g.y - o.y), o.z + f * (g.z - o.z))


class RandomWaypoint:
    """Drives one UE through successive legs; ``on_leg`` fires at each leg start."""

    def __init__(
        self,
        engine: Engine,
        region: Region,
        rng,
        h_ut_m: float = 1.5,
        speed_range: tuple[float, float] = (0.2, 1.5),
        pause=None,
        on_leg: Callable[[MobilityLeg], None] | None = None,
    ):
        self.engine = engine
        self.region = region
        self.rng = rng
        self.h_ut_m = h_ut_m
        self.speed_range = speed_range
        self.pause = pause
        self.on_leg = on_leg
        self.stop_at: int | None = None
        start, _ = sample_waypoint(region, rng, h_ut_m, speed_range)
        self.leg = MobilityLeg(start, start, 1.0, engine.now)
        self.legs = 0

    def start(self, stop_at: int) -> None:
        self.stop_at = stop_at
        self._next_leg()

    def position(self, t: int | None = None) -> Position3D:
        return position_at(self.leg, self.engine.now if t is None else t)

    def _next_leg(self) -> None:
        now = self.engine.now
        here = self.leg.target
        target, speed = sample_waypoint(self.region, self.rng, self.h_ut_m, self.speed_range)
        wait = self.pause.sample(self.rng) if self.pause is not None else 0.0
        self.leg = MobilityLeg(here, target, speed, now + round(wait * NS_PER_S))
        self.legs += 1
        if self.on_leg is not None:
            self.on_leg(self.leg)
        arrive = self.leg.arrive_at
        if arrive == now:
            return  # degenerate region: nowhere to go
        if arrive < self.stop_at:
            self.engine.schedule(arrive, self._next_leg)
