"""Simplified NR link layer: slot clock, logistic BLER, capped-Shannon rate, round robin, HARQ."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

from .engine import Engine, RngStream, NS_PER_S


class Direction(str, Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"

    @property
    def short(self) -> str:
        return "dl" if self is Direction.DOWNLINK else "ul"


@dataclass(frozen=True)
class Numerology:
    mu: int = 4

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"numerology mu must be >= 0, got {self.mu}")

    @property
    def subcarrier_spacing_khz(self) -> float:
        return 15.0 * 2**self.mu

    @property
    def slot_ns(self) -> int:
        return NS_PER_S // 1000 // 2**self.mu


def slot_duration(n: Numerology) -> float:
    return 1e-3 / 2**n.mu


@dataclass(frozen=True)
class BlerCurve:
    s50_db: float = 3.0
    slope_per_db: float = 1.0

    def __post_init__(self):
        if not self.slope_per_db > 0:
            raise ValueError("slope_per_db must be > 0")

    @classmethod
    def from_target(cls, target_bler: float, target_sinr_db: float, slope_per_db: float = 1.0) -> "BlerCurve":
        """Place the curve so that ``bler(target_sinr_db) == target_bler``."""
        if not 0 < target_bler < 1:
            raise ValueError(f"target_bler must be in (0, 1), got {target_bler}")
        return cls(target_sinr_db - math.log(1.0 / target_bler - 1.0) / slope_per_db, slope_per_db)

    def probability(self, sinr_db: float) -> float:
        x = self.slope_per_db * (sinr_db - self.s50_db)
        if x > 0:
            e = math.exp(-x)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(x))


@dataclass(frozen=True)
class FixedBler:
    """SINR-independent block error probability, for forced-channel experiments."""

    p: float

    def probability(self, sinr_db: float) -> float:
        return self.p


def bler(sinr_db: float, curve: BlerCurve | FixedBler) -> float:
    return curve.probability(sinr_db)


def spectral_efficiency(sinr_db: float, efficiency_factor: float = 0.75, se_cap: float = 7.4) -> float:
    """Attenuated Shannon efficiency in bit/s/Hz, capped at ``se_cap`` before scaling."""
    if sinr_db == -math.inf:
        return 0.0
    return efficiency_factor * min(math.log2(1.0 + 10.0 ** (sinr_db / 10.0)), se_cap)


class Outcome(str, Enum):
    DELIVERED = "delivered"
    RETRANSMIT = "retransmit"
    FAILED = "failed"


class HarqError(RuntimeError):
    pass


@dataclass
class HarqProcess:
    max_attempts: int = 4
    combining_gain_db: float = 3.0
    attempts: int = 1
    finished: bool = False

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def harq_step(p: HarqProcess, sinr_db: float, curve: BlerCurve | FixedBler, rng) -> Outcome:
    """Decode one attempt; soft combining credits each earlier attempt with the gain."""
    if p.finished:
        raise HarqError("HARQ process already terminated")
    if not 1 <= p.attempts <= p.max_attempts:
        raise HarqError(f"attempt {p.attempts} outside 1..{p.max_attempts}")
    effective = sinr_db + (p.attempts - 1) * p.combining_gain_db
    if rng.random() >= curve.probability(effective):
        p.finished = True
        return Outcome.DELIVERED
    if p.attempts < p.max_attempts:
        p.attempts += 1
        return Outcome.RETRANSMIT
    p.finished = True
    return Outcome.FAILED


@dataclass
class TransportBlock:
    frame: object
    ue_id: int
    direction: Direction
    size_bits: float
    created_at: int
    harq: HarqProcess = field(default_factory=HarqProcess)
    remaining_bits: float = -1.0

    def __post_init__(self):
        if not self.size_bits > 0:
            raise ValueError("transport block must carry > 0 bits")
        if self.remaining_bits < 0:
            self.remaining_bits = self.size_bits


@dataclass(frozen=True)
class Allocation:
    ue_id: int
    share: float
    capacity_bits: float
    bits: float


def schedule_slot(
    pending: Mapping[int, float],
    slot_capacity_bits: Mapping[int, float],
    start: int = 0,
) -> list[Allocation]:
    """Split one slot equally over UEs with pending bits, listed in round-robin order.

    ``slot_capacity_bits`` is each UE's capacity if it owned the whole band;
    its allocation is capped at its share of that and at its backlog.
    """
    active = sorted(ue for ue, bits in pending.items() if bits > 0)
    if not active:
        return []
    k = start % len(active)
    active = active[k:] + active[:k]
    share = 1.0 / len(active)
    out = []
    for ue in active:
        cap = slot_capacity_bits[ue] * share
        out.append(Allocation(ue, share, cap, min(cap, pending[ue])))
    return out


_EPS_BITS = 1e-6


class NrCell:
    """One direction of the gNB air interface driven by slot ticks on the engine.

    Ticks run only while something is queued or awaiting decode. A transport
    block that finishes transmitting in a slot is decoded at the slot's end;
    a failed attempt re-enters the head of its UE queue one HARQ round trip
    after that decode.
    """

    def __init__(
        self,
        engine: Engine,
        direction: Direction,
        numerology: Numerology,
        bandwidth_hz: float,
        curve: BlerCurve | FixedBler,
        sinr_fn: Callable[[int], float],
        on_attempt: Callable[[TransportBlock, float, Outcome], None],
        on_delivered: Callable[[TransportBlock], None],
        on_failed: Callable[[TransportBlock], None],
        max_attempts: int = 4,
        combining_gain_db: float = 3.0,
        harq_rtt_slots: int = 8,
        efficiency_factor: float = 0.75,
        se_cap: float = 7.4,
    ):
        self.engine = engine
        self.direction = direction
        self.slot_ns = numerology.slot_ns
        self.slot_s = self.slot_ns / NS_PER_S
        self.bandwidth_hz = bandwidth_hz
        self.curve = curve
        self.sinr_fn = sinr_fn
        self.on_attempt = on_attempt
        self.on_delivered = on_delivered
        self.on_failed = on_failed
        self.max_attempts = max_attempts
        self.combining_gain_db = combining_gain_db
        self.harq_rtt_ns = harq_rtt_slots * self.slot_ns
        self.efficiency_factor = efficiency_factor
        self.se_cap = se_cap
        self.queues: dict[int, deque[TransportBlock]] = {}
        self.backlog: dict[int, float] = {}
        self._decoding: list[TransportBlock] = []
        self._tick_pending = False
        self._rr = 0
        self._rngs: dict[int, RngStream] = {}
        self.slots_used = 0
        self.served_bits: dict[int, float] = {}

    def new_block(self, frame, ue_id: int, size_bits: float) -> TransportBlock:
        return TransportBlock(
            frame, ue_id, self.direction, size_bits, self.engine.now,
            HarqProcess(self.max_attempts, self.combining_gain_db),
        )

    def submit(self, tb: TransportBlock, front: bool = False) -> None:
        q = self.queues.get(tb.ue_id)
        if q is None:
            q = self.queues[tb.ue_id] = deque()
            self.backlog[tb.ue_id] = 0.0
        if front:
            q.appendleft(tb)
        else:
            q.append(tb)
        self.backlog[tb.ue_id] += tb.remaining_bits
        self._wake()

    def _wake(self) -> None:
        if self._tick_pending:
            return
        now = self.engine.now
        at = -(-now // self.slot_ns) * self.slot_ns
        self._tick_pending = True
        self.engine.schedule(at, self._tick)

    def _rng(self, ue_id: int) -> RngStream:
        rng = self._rngs.get(ue_id)
        if rng is None:
            rng = self._rngs[ue_id] = self.engine.rng_stream(f"harq.{self.direction.short}.ue{ue_id}")
        return rng

    def _tick(self) -> None:
        self._tick_pending = False
        decoding, self._decoding = self._decoding, []
        for tb in decoding:
            self._decode(tb)

        pending = {ue: bits for ue, bits in self.backlog.items() if bits > _EPS_BITS}
        if pending:
            capacity = {
                ue: spectral_efficiency(self.sinr_fn(ue), self.efficiency_factor, self.se_cap)
                * self.bandwidth_hz * self.slot_s
                for ue in pending
            }
            for alloc in schedule_slot(pending, capacity, self._rr):
                self._serve(alloc.ue_id, alloc.bits)
            self._rr += 1
            self.slots_used += 1

        if self._decoding or any(bits > _EPS_BITS for bits in self.backlog.values()):
            self._tick_pending = True
            self.engine.schedule(self.engine.now + self.slot_ns, self._tick)

    def _serve(self, ue_id: int, bits: float) -> None:
        q = self.queues[ue_id]
        self.served_bits[ue_id] = self.served_bits.get(ue_id, 0.0) + bits
        self.backlog[ue_id] -= bits
        while q and bits > _EPS_BITS:
            head = q[0]
            take = min(head.remaining_bits, bits)
            head.remaining_bits -= take
            bits -= take
            if head.remaining_bits <= _EPS_BITS:
                head.remaining_bits = 0.0
                q.popleft()
                self._decoding.append(head)
        if not q:
            self.backlog[ue_id] = 0.0

    def _decode(self, tb: TransportBlock) -> None:
        sinr = self.sinr_fn(tb.ue_id)
        outcome = harq_step(tb.harq, sinr, self.curve, self._rng(tb.ue_id))
        self.on_attempt(tb, sinr, outcome)
        if outcome is Outcome.DELIVERED:
            self.on_delivered(tb)
        elif outcome is Outcome.RETRANSMIT:
            tb.remaining_bits = tb.size_bits
            self.engine.schedule(self.engine.now + self.harq_rtt_ns, self.submit, tb, True)
        else:
            self.on_failed(tb)
