"""TSN switch egress: encapsulation, PCP mapping, strict priority and a credit-based shaper."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

from .engine import Engine, Event, NS_PER_S

UDP_BYTES = 8
IP_BYTES = 20
ETH_MAC_BYTES = 14
ETH_FCS_BYTES = 4
ETH_PHY_BYTES = 8
ENCAPSULATION_BYTES = UDP_BYTES + IP_BYTES + ETH_MAC_BYTES + ETH_FCS_BYTES + ETH_PHY_BYTES
IFG_BYTES = 12
CUSHION_BYTES = 1


class TrafficClass(str, Enum):
    NETWORK_CONTROL = "NC"
    VIDEO = "Video"
    BEST_EFFORT = "BE"

    @classmethod
    def parse(cls, value: "str | TrafficClass") -> "TrafficClass":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "nc": cls.NETWORK_CONTROL, "networkcontrol": cls.NETWORK_CONTROL,
            "video": cls.VIDEO,
            "be": cls.BEST_EFFORT, "besteffort": cls.BEST_EFFORT,
        }
        if key not in aliases:
            raise ValueError(f"unknown traffic class {value!r}")
        return aliases[key]

    @property
    def key(self) -> str:
        return {"NC": "nc", "Video": "video", "BE": "be"}[self.value]


DEFAULT_PCP = {
    TrafficClass.NETWORK_CONTROL: 7,
    TrafficClass.VIDEO: 5,
    TrafficClass.BEST_EFFORT: 0,
}


def map_pcp(cls: TrafficClass, mapping: Mapping[TrafficClass, int] | None = None) -> int:
    pcp = (mapping or DEFAULT_PCP)[TrafficClass.parse(cls)]
    if not 0 <= pcp <= 7:
        raise ValueError(f"PCP must be in 0..7, got {pcp}")
    return pcp


class OversubscriptionError(ValueError):
    pass


@dataclass(slots=True)
class Frame:
    app_payload_bytes: int
    wire_bytes: int
    pcp: int
    cls: TrafficClass
    stream_id: str
    ue_id: int
    direction: str
    created_at: int
    sequence: int
    frame_id: int = 0

    @property
    def wire_bits(self) -> int:
        return self.wire_bytes * 8


def encapsulate(app_payload_bytes: int) -> int:
    if app_payload_bytes < 0:
        raise ValueError("payload must be >= 0 bytes")
    return app_payload_bytes + ENCAPSULATION_BYTES


def stream_data_rate(wire_bytes: int, packet_interval_s: float) -> float:
    """Reserved bit rate of one stream, counting inter-frame gap and a one-byte cushion."""
    if not packet_interval_s > 0:
        raise ValueError("packet interval must be > 0")
    return (wire_bytes + IFG_BYTES + CUSHION_BYTES) * 8 / packet_interval_s


def compute_slopes(per_stream_bps: float, n_streams: int, port_bitrate_bps: float) -> tuple[float, float]:
    """Aggregate reservation as idleSlope; sendSlope = idleSlope - port bitrate."""
    idle = n_streams * per_stream_bps
    if not 0 < idle < port_bitrate_bps:
        raise OversubscriptionError(
            f"video reservation {idle:.1f} bps must lie strictly between 0 and the port bitrate {port_bitrate_bps:.1f} bps"
        )
    return idle, idle - port_bitrate_bps


@dataclass(frozen=True)
class CbsState:
    credit_bits: float
    idle_slope_bps: float
    send_slope_bps: float

    @classmethod
    def for_port(cls, idle_slope_bps: float, port_bitrate_bps: float) -> "CbsState":
        return cls(0.0, idle_slope_bps, idle_slope_bps - port_bitrate_bps)

    @property
    def gate_open(self) -> bool:
        return self.credit_bits >= 0


def cbs_advance(state: CbsState, start: int, end: int, transmitting_video: bool, queue_empty: bool) -> CbsState:
    """Evolve credit over [start, end] ns with the shaped queue's status held fixed."""
    if end < start:
        raise ValueError("cannot advance credit backwards in time")
    credit = state.credit_bits
    if end == start and (credit <= 0 or not queue_empty or transmitting_video):
        return state
    dt = (end - start) / NS_PER_S
    if transmitting_video:
        credit += state.send_slope_bps * dt
    elif not queue_empty:
        credit += state.idle_slope_bps * dt
    elif credit < 0:
        credit = min(0.0, credit + state.idle_slope_bps * dt)
    else:
        credit = 0.0
    return CbsState(credit, state.idle_slope_bps, state.send_slope_bps)


@dataclass
class EgressRecord:
    time_ns: int
    frame: Frame
    queue_wait_ns: int
    eligible_pcps: tuple[int, ...]
    credit_bits_after: float | None = None


class EgressPort:
    """Non-preemptive strict-priority output port with an optional CBS on one PCP."""

    def __init__(
        self,
        engine: Engine,
        bitrate_bps: float,
        on_transmitted: Callable[[Frame], None],
        cbs: CbsState | None = None,
        shaped_pcp: int = DEFAULT_PCP[TrafficClass.VIDEO],
        per_hop_latency_ns: int = 0,
        keep_trace: bool = False,
        name: str = "port",
    ):
        if not bitrate_bps > 0:
            raise ValueError("port bitrate must be > 0")
        self.engine = engine
        self.name = name
        self.bitrate_bps = bitrate_bps
        self.on_transmitted = on_transmitted
        self.cbs = cbs
        self.shaped_pcp = shaped_pcp
        self.per_hop_latency_ns = per_hop_latency_ns
        self.queues: dict[int, deque[tuple[Frame, int]]] = {}
        self._order: list[int] = []
        self.busy_until = 0
        self.in_flight: Frame | None = None
        self._tx_shaped = False
        self._cbs_t = engine.now
        self._wake: Event | None = None
        self.trace: list[EgressRecord] | None = [] if keep_trace else None
        self._last_record: EgressRecord | None = None
        self.sent_bits: dict[int, int] = {}

    def queue_len(self, pcp: int) -> int:
        q = self.queues.get(pcp)
        return len(q) if q else 0

    def _sync_credit(self) -> None:
        if self.cbs is None:
            return
        now = self.engine.now
        cbs = cbs_advance(self.cbs, self._cbs_t, now, self._tx_shaped, not self.queues.get(self.shaped_pcp))
        if cbs.credit_bits != 0.0 and abs(cbs.credit_bits) < 1e-6:
            cbs = CbsState(0.0, cbs.idle_slope_bps, cbs.send_slope_bps)
        self.cbs = cbs
        self._cbs_t = now

    def enqueue(self, frame: Frame) -> None:
        self._sync_credit()
        q = self.queues.get(frame.pcp)
        if q is None:
            q = self.queues[frame.pcp] = deque()
            self._order = sorted(self.queues, reverse=True)
        q.append((frame, self.engine.now))
        if self.in_flight is None:
            self._try_send()

    def eligible_pcps(self) -> tuple[int, ...]:
        out = []
        for pcp in self._order:
            if not self.queues[pcp]:
                continue
            if pcp == self.shaped_pcp and self.cbs is not None and not self.cbs.gate_open:
                continue
            out.append(pcp)
        return tuple(out)

    def select(self) -> Frame | None:
        """Dequeue the head of the highest-PCP eligible queue, or return None."""
        if self.in_flight is not None or self.engine.now < self.busy_until:
            raise RuntimeError(f"{self.name}: selection while a frame is on the wire")
        self._sync_credit()
        eligible = self.eligible_pcps()
        if not eligible:
            return None
        frame, queued_at = self.queues[eligible[0]].popleft()
        if self.trace is not None:
            self._last_record = EgressRecord(self.engine.now, frame, self.engine.now - queued_at, eligible)
            self.trace.append(self._last_record)
        return frame

    def _try_send(self) -> None:
        if self.in_flight is not None:
            return
        frame = self.select()
        if frame is None:
            self._arm_wake()
            return
        if self._wake is not None:
            self._wake.cancel()
            self._wake = None
        self.in_flight = frame
        self._tx_shaped = frame.pcp == self.shaped_pcp and self.cbs is not None
        duration = max(1, round(frame.wire_bits * NS_PER_S / self.bitrate_bps))
        self.busy_until = self.engine.now + duration
        self.engine.schedule(self.busy_until, self._tx_done)

    def _arm_wake(self) -> None:
        # gated shaped queue with nothing else to send: wake when credit returns to zero
        if self.cbs is None or not self.queues.get(self.shaped_pcp) or self.cbs.gate_open:
            return
        if self._wake is not None:
            self._wake.cancel()
        dt_ns = math.ceil(-self.cbs.credit_bits / self.cbs.idle_slope_bps * NS_PER_S)
        self._wake = self.engine.schedule(self.engine.now + max(1, dt_ns), self._on_wake)

    def _on_wake(self) -> None:
        self._wake = None
        self._try_send()

    def _tx_done(self) -> None:
        self._sync_credit()
        frame = self.in_flight
        self.in_flight = None
        self._tx_shaped = False
        self._sync_credit()
        self.sent_bits[frame.pcp] = self.sent_bits.get(frame.pcp, 0) + frame.wire_bits
        if self._last_record is not None and self._last_record.frame is frame and self.cbs is not None:
            self._last_record.credit_bits_after = self.cbs.credit_bits
        if self.per_hop_latency_ns:
            self.engine.schedule(self.engine.now + self.per_hop_latency_ns, self.on_transmitted, frame)
        else:
            self.on_transmitted(frame)
        self._try_send()


def egress_select(port: EgressPort, now: int | None = None) -> Frame | None:
    if now is not None and now != port.engine.now:
        raise ValueError("egress selection must happen at the engine's current time")
    return port.select()
