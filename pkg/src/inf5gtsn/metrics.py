"""Delay / SINR / HARQ sample collection, nearest-rank summaries and CSV export."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .engine import NS_PER_S
from .radio import Direction, Outcome
from .tsn import TrafficClass

CLASSES = (TrafficClass.NETWORK_CONTROL, TrafficClass.VIDEO, TrafficClass.BEST_EFFORT)
DIRECTIONS = (Direction.DOWNLINK, Direction.UPLINK)


class MetricsError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class DelaySample:
    time_ns: int  # delivery time
    ue_id: int
    cls: TrafficClass
    direction: Direction
    delay_ns: int

    @property
    def delay_s(self) -> float:
        return self.delay_ns / NS_PER_S


@dataclass(frozen=True, slots=True)
class SinrSample:
    time_ns: int
    ue_id: int
    direction: Direction
    sinr_db: float
    los: bool = True


@dataclass(frozen=True, slots=True)
class HarqSample:
    time_ns: int
    direction: Direction
    outcome: Outcome


@dataclass
class HarqCounters:
    transmissions: int = 0
    failures: int = 0


def harq_error_rate(c: HarqCounters) -> float | None:
    """Failed transmissions over all transmissions; None when nothing was sent."""
    if c.transmissions == 0:
        return None
    return c.failures / c.transmissions


def nearest_rank(sorted_values, p: float):
    n = len(sorted_values)
    if n == 0:
        raise ValueError("percentile of an empty sample")
    rank = max(1, math.ceil(p / 100.0 * n))
    return sorted_values[min(rank, n) - 1]


@dataclass(frozen=True)
class Stats:
    count: int
    mean: float
    min: float
    q1: float
    p50: float
    q3: float
    p95: float
    p99: float
    max: float

    @classmethod
    def of(cls, values) -> "Stats | None":
        xs = sorted(values)
        if not xs:
            return None
        return cls(
            count=len(xs),
            mean=math.fsum(xs) / len(xs),
            min=xs[0],
            q1=nearest_rank(xs, 25),
            p50=nearest_rank(xs, 50),
            q3=nearest_rank(xs, 75),
            p95=nearest_rank(xs, 95),
            p99=nearest_rank(xs, 99),
            max=xs[-1],
        )


@dataclass
class Summary:
    delay: dict[tuple[TrafficClass, Direction], Stats | None] = field(default_factory=dict)
    dropped: dict[tuple[TrafficClass, Direction], int] = field(default_factory=dict)
    sinr: dict[Direction, Stats | None] = field(default_factory=dict)
    los_fraction: dict[Direction, float | None] = field(default_factory=dict)
    harq_error_rate: dict[Direction, float | None] = field(default_factory=dict)
    generated: int = 0
    delivered: int = 0
    dropped_total: int = 0
    in_flight: int = 0


class MetricsStore:
    def __init__(self, warmup_ns: int = 0):
        self.warmup_ns = warmup_ns
        self.delays: list[DelaySample] = []
        self.sinr: list[SinrSample] = []
        self.harq = {d: HarqCounters() for d in DIRECTIONS}
        self.generated: dict[tuple[TrafficClass, Direction], int] = {}
        self.delivered: dict[tuple[TrafficClass, Direction], int] = {}
        self.dropped: dict[tuple[TrafficClass, Direction], int] = {}

    def record(self, sample) -> None:
        if isinstance(sample, DelaySample):
            if sample.delay_ns < 0:
                raise MetricsError(f"negative delay {sample.delay_ns} ns for UE {sample.ue_id}")
            if sample.time_ns - sample.delay_ns >= self.warmup_ns:
                self.delays.append(sample)
        elif isinstance(sample, SinrSample):
            if sample.time_ns >= self.warmup_ns:
                self.sinr.append(sample)
        elif isinstance(sample, HarqSample):
            if sample.time_ns >= self.warmup_ns:
                c = self.harq[sample.direction]
                c.transmissions += 1
                if sample.outcome is not Outcome.DELIVERED:
                    c.failures += 1
        else:
            raise TypeError(f"cannot record {type(sample).__name__}")

    def count_generated(self, cls: TrafficClass, direction: Direction) -> None:
        key = (cls, direction)
        self.generated[key] = self.generated.get(key, 0) + 1

    def count_delivered(self, cls: TrafficClass, direction: Direction) -> None:
        key = (cls, direction)
        self.delivered[key] = self.delivered.get(key, 0) + 1

    def count_dropped(self, cls: TrafficClass, direction: Direction) -> None:
        key = (cls, direction)
        self.dropped[key] = self.dropped.get(key, 0) + 1

    def delay_values(self, cls: TrafficClass, direction: Direction) -> list[float]:
        return [s.delay_s for s in self.delays if s.cls is cls and s.direction is direction]

    def sinr_values(self, direction: Direction) -> list[float]:
        return [s.sinr_db for s in self.sinr if s.direction is direction]


def summarize(store: MetricsStore) -> Summary:
    out = Summary()
    pools: dict[tuple[TrafficClass, Direction], list[float]] = {}
    for s in store.delays:
        pools.setdefault((s.cls, s.direction), []).append(s.delay_s)
    for d in DIRECTIONS:
        for c in CLASSES:
            key = (c, d)
            if key in pools or store.generated.get(key) or store.dropped.get(key):
                out.delay[key] = Stats.of(pools.get(key, []))
                out.dropped[key] = store.dropped.get(key, 0)
        pool = [s for s in store.sinr if s.direction is d]
        if pool:
            out.sinr[d] = Stats.of(s.sinr_db for s in pool)
            out.los_fraction[d] = sum(s.los for s in pool) / len(pool)
        if store.harq[d].transmissions:
            out.harq_error_rate[d] = harq_error_rate(store.harq[d])
    out.generated = sum(store.generated.values())
    out.delivered = sum(store.delivered.values())
    out.dropped_total = sum(store.dropped.values())
    out.in_flight = out.generated - out.delivered - out.dropped_total
    return out


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(x, ".9g")


SUMMARY_COLUMNS = ["metric", "class", "direction", "count", "mean", "min", "q1", "p50", "q3", "p95", "p99", "max", "value", "dropped"]
STAT_FIELDS = ["count", "mean", "min", "q1", "p50", "q3", "p95", "p99", "max"]


def summary_rows(summary: Summary) -> list[list[str]]:
    rows = []

    def stat_cells(st: Stats | None):
        if st is None:
            return ["0"] + [""] * (len(STAT_FIELDS) - 1)
        return [fmt(getattr(st, f)) for f in STAT_FIELDS]

    for (c, d), st in summary.delay.items():
        rows.append(["delay_s", c.value, d.value, *stat_cells(st), "", fmt(summary.dropped.get((c, d), 0))])
    for d, st in summary.sinr.items():
        rows.append(["sinr_db", "", d.value, *stat_cells(st), fmt(summary.los_fraction.get(d)), ""])
    for d, rate in summary.harq_error_rate.items():
        rows.append(["harq_error_rate", "", d.value, *[""] * len(STAT_FIELDS), fmt(rate), ""])
    return rows


def _writer(path: Path):
    f = open(path, "w", newline="", encoding="utf-8")
    return f, csv.writer(f, lineterminator="\n")


def export_csv(store: MetricsStore, directory, summary: Summary | None = None) -> list[Path]:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if not os.access(directory, os.W_OK):
            raise PermissionError(f"directory {directory} is not writable")
    except OSError as e:
        raise OSError(f"cannot write metrics to {directory}: {e}") from e
    summary = summary or summarize(store)
    paths = []

    path = directory / "delay.csv"
    f, w = _writer(path)
    with f:
        w.writerow(["time_s", "ue_id", "class", "direction", "delay_s"])
        for s in sorted(store.delays, key=lambda s: (s.time_ns, s.ue_id)):
            w.writerow([fmt(s.time_ns / NS_PER_S), s.ue_id, s.cls.value, s.direction.value, fmt(s.delay_s)])
    paths.append(path)

    path = directory / "sinr.csv"
    f, w = _writer(path)
    with f:
        w.writerow(["time_s", "ue_id", "direction", "sinr_db"])
        for s in sorted(store.sinr, key=lambda s: (s.time_ns, s.ue_id)):
            w.writerow([fmt(s.time_ns / NS_PER_S), s.ue_id, s.direction.value, fmt(s.sinr_db)])
    paths.append(path)

    path = directory / "harq.csv"
    f, w = _writer(path)
    with f:
        w.writerow(["direction", "transmissions", "failures", "error_rate"])
        for d in DIRECTIONS:
            c = store.harq[d]
            if c.transmissions:
                w.writerow([d.value, c.transmissions, c.failures, fmt(harq_error_rate(c))])
    paths.append(path)

    path = directory / "summary.csv"
    f, w = _writer(path)
    with f:
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(summary_rows(summary))
    paths.append(path)
    return paths
