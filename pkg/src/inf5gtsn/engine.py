"""Event kernel: integer-nanosecond clock, FIFO tie-breaking, named RNG substreams."""

from __future__ import annotations

import hashlib
import heapq
import itertools
import math
import random
from dataclasses import dataclass
from typing import Any, Callable

NS_PER_S = 1_000_000_000


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


def to_s(ns: int) -> float:
    return ns / NS_PER_S


class SchedulingError(ValueError):
    pass


@dataclass
class Event:
    fire_at: int
    sequence: int
    action: Callable[..., Any]
    args: tuple = ()
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


def derive_seed(*parts: object) -> int:
    """Hash arbitrary labels into a 64-bit seed; stable across platforms and runs."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream(random.Random):
    """A `random.Random` keyed by (master seed, name)."""

    def __new__(cls, seed: int, name: str):
        return super().__new__(cls)

    def __init__(self, seed: int, name: str):
        self.name = name
        super().__init__(derive_seed(seed, name))

    def bernoulli(self, p: float) -> bool:
        return self.random() < p


class Engine:
    def __init__(self, seed: int = 0, log_events: bool = False):
        self.seed = seed
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = itertools.count()
        self._streams: dict[str, RngStream] = {}
        self.fired = 0
        self.log: list[tuple[int, int, str]] | None = [] if log_events else None

    @property
    def now_s(self) -> float:
        return self.now / NS_PER_S

    def schedule(self, at: int, action: Callable[..., Any], *args: Any) -> Event:
        if at < self.now:
            raise SchedulingError(f"cannot schedule at {at} ns, clock is already {self.now} ns")
        ev = Event(int(at), next(self._seq), action, args)
        heapq.heappush(self._queue, (ev.fire_at, ev.sequence, ev))
        return ev

    def schedule_in(self, delay: int, action: Callable[..., Any], *args: Any) -> Event:
        return self.schedule(self.now + delay, action, *args)

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, t_end: int | float) -> int:
        """Fire every event with fire_at <= t_end; leave the clock at t_end.

        ``t_end`` may be ``math.inf`` to drain the queue, in which case the
        clock stays at the last event time.
        """
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before the clock ({self.now})")
        count = 0
        queue = self._queue
        log = self.log
        while queue and queue[0][0] <= t_end:
            ev = heapq.heappop(queue)[2]
            if ev.cancelled:
                continue
            self.now = ev.fire_at
            if log is not None:
                log.append((ev.fire_at, ev.sequence, getattr(ev.action, "__qualname__", repr(ev.action))))
            ev.action(*ev.args)
            count += 1
        if not math.isinf(t_end):
            self.now = int(t_end)
        self.fired += count
        return count

    def rng_stream(self, name: str) -> RngStream:
        stream = self._streams.get(name)
        if stream is None:
            stream = self._streams[name] = RngStream(self.seed, name)
        return stream
