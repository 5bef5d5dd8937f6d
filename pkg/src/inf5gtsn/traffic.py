"""Per-UE NC / Video / BE application streams with randomized start times and offsets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .engine import Engine, to_ns
from .tsn import DEFAULT_PCP, Frame, TrafficClass, encapsulate, map_pcp


@dataclass(frozen=True)
class Dist:
    """Non-negative scalar distribution in seconds: ``const``, ``uniform`` or ``exponential`` (by mean)."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        n = {"const": 1, "uniform": 2, "exponential": 1}.get(self.kind)
        if n is None:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if len(self.params) != n:
            raise ValueError(f"{self.kind} takes {n} parameter(s), got {len(self.params)}")
        if any(p < 0 for p in self.params):
            raise ValueError(f"{self.kind} parameters must be >= 0")
        if self.kind == "uniform" and self.params[0] > self.params[1]:
            raise ValueError("uniform needs low <= high")

    @classmethod
    def const(cls, value: float) -> "Dist":
        return cls("const", (float(value),))

    @classmethod
    def uniform(cls, low: float, high: float) -> "Dist":
        return cls("uniform", (float(low), float(high)))

    @classmethod
    def exponential(cls, mean: float) -> "Dist":
        return cls("exponential", (float(mean),))

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return (self.params[0] + self.params[1]) / 2
        return self.params[0]

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "const":
            return self.params[0], self.params[0]
        if self.kind == "uniform":
            return self.params
        return 0.0, float("inf")

    def sample(self, rng) -> float:
        if self.kind == "const":
            return self.params[0]
        if self.kind == "uniform":
            lo, hi = self.params
            return lo if lo == hi else rng.uniform(lo, hi)
        mean = self.params[0]
        return rng.expovariate(1.0 / mean) if mean > 0 else 0.0

    def to_config(self):
        return {self.kind: self.params[0] if len(self.params) == 1 else list(self.params)}

    @classmethod
    def from_config(cls, value) -> "Dist":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return cls.const(value)
        if not isinstance(value, dict) or len(value) != 1:
            raise ValueError("distribution must be a number or a one-key mapping like {uniform: [a, b]}")
        (kind, params), = value.items()
        if not isinstance(params, (list, tuple)):
            params = [params]
        return cls(str(kind), tuple(float(p) for p in params))


@dataclass(frozen=True)
class TrafficSpec:
    cls: TrafficClass
    payload_bytes: int
    interval: Dist
    start_time: Dist
    initial_offset: Dist

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be > 0")


def default_specs() -> list[TrafficSpec]:
    return [
        TrafficSpec(TrafficClass.NETWORK_CONTROL, 498, Dist.const(0.055), Dist.uniform(0.0, 0.1), Dist.uniform(0.0, 0.005)),
        TrafficSpec(TrafficClass.VIDEO, 1453, Dist.uniform(0.060, 0.065), Dist.uniform(0.2, 0.5), Dist.uniform(0.0, 0.020)),
        TrafficSpec(TrafficClass.BEST_EFFORT, 1429, Dist.exponential(0.600), Dist.uniform(0.5, 1.0), Dist.uniform(0.0, 0.100)),
    ]


@dataclass
class StreamGenerator:
    spec: TrafficSpec
    ue_id: int
    direction: str
    rng: object
    pcp_map: dict = field(default_factory=lambda: dict(DEFAULT_PCP))
    next_fire: int | None = None
    sequence: int = 0

    @property
    def stream_id(self) -> str:
        return f"{self.direction}.ue{self.ue_id}.{self.spec.cls.key}"


def first_emission(gen: StreamGenerator, rng=None) -> int:
    rng = rng or gen.rng
    t = to_ns(gen.spec.start_time.sample(rng) + gen.spec.initial_offset.sample(rng))
    gen.next_fire = t
    return t


def next_frame(gen: StreamGenerator, rng=None) -> tuple[int, Frame]:
    """Emit the frame due at ``gen.next_fire`` and advance by one interval (at least 1 ns)."""
    rng = rng or gen.rng
    if gen.next_fire is None:
        first_emission(gen, rng)
    t = gen.next_fire
    spec = gen.spec
    frame = Frame(
        app_payload_bytes=spec.payload_bytes,
        wire_bytes=encapsulate(spec.payload_bytes),
        pcp=map_pcp(spec.cls, gen.pcp_map),
        cls=spec.cls,
        stream_id=gen.stream_id,
        ue_id=gen.ue_id,
        direction=gen.direction,
        created_at=t,
        sequence=gen.sequence,
    )
    gen.sequence += 1
    gen.next_fire = t + max(1, to_ns(spec.interval.sample(rng)))
    return t, frame


def attach(gen: StreamGenerator, engine: Engine, sink: Callable[[Frame], None], stop_at: int) -> None:
    """Drive the generator from engine events until ``stop_at`` (exclusive)."""

    def fire():
        _, frame = next_frame(gen)
        sink(frame)
        if gen.next_fire < stop_at:
            engine.schedule(gen.next_fire, fire)

    t0 = first_emission(gen)
    if t0 < stop_at:
        engine.schedule(max(t0, engine.now), fire)
