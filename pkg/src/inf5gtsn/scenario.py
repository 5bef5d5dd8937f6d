"""Wire engine, channel, radio, TSN switch, traffic and mobility into runnable scenarios and sweeps."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import config as config_mod
from .channel import InFProfile, Position3D, draw_large_scale, effective_d3d, noise_dbm, pathloss
from .config import ConfigError, ScenarioConfig, SweepConfig
from .engine import Engine, derive_seed, to_ns
from .metrics import (
    CLASSES,
    DIRECTIONS,
    DelaySample,
    HarqSample,
    MetricsStore,
    SinrSample,
    Summary,
    export_csv,
    fmt,
    summarize,
)
from .mobility import RandomWaypoint, Region
from .radio import BlerCurve, Direction, FixedBler, NrCell, Numerology
from .tsn import (
    CbsState,
    EgressPort,
    OversubscriptionError,
    TrafficClass,
    compute_slopes,
    encapsulate,
    stream_data_rate,
)
from .traffic import StreamGenerator, TrafficSpec, attach

log = logging.getLogger(__name__)


class ConservationError(RuntimeError):
    pass


class Ue:
    def __init__(self, ue_id: int, mobility: RandomWaypoint):
        self.ue_id = ue_id
        self.mobility = mobility
        self.los = True
        self.shadow_db = 0.0


class Scenario:
    """One fully isolated simulation instance.

    Downlink frames go server -> switch egress -> gNB -> air -> UE; uplink frames
    go UE -> air -> gNB -> switch egress -> server. Delay is measured from the
    application's emission to delivery at the far application.
    """

    def __init__(self, cfg: ScenarioConfig, log_events: bool = False):
        config_mod.validate(cfg)
        self.cfg = cfg
        self.engine = Engine(cfg.seed, log_events=log_events)
        self.profile = InFProfile.parse(cfg.profile)
        self.chan = cfg.channel_config()
        self.gnb = Position3D(0.0, 0.0, self.chan.h_bs_m)
        self.region = Region.named(cfg.region, Position3D(0.0, 0.0, 0.0))
        self.duration_ns = to_ns(cfg.duration_s)
        warmup = to_ns(cfg.warmup_s) if cfg.warmup_exclude else 0
        self.store = MetricsStore(warmup_ns=warmup)
        self.positions: list[tuple[int, int, Position3D]] = []
        self._frame_ids = 0
        self.ues: list[Ue] = []

        r = cfg.radio
        if r.forced_bler is not None:
            curve = FixedBler(r.forced_bler)
        else:
            curve = BlerCurve.from_target(cfg.target_bler, r.bler_target_sinr_db, r.bler_slope_per_db)
        numerology = Numerology(cfg.numerology)
        c = cfg.channel
        self._budget = {
            Direction.DOWNLINK: (cfg.tx_power_dbm, noise_dbm(c.bandwidth_hz, c.ue_noise_figure_db)),
            Direction.UPLINK: (cfg.ue_tx_power_dbm, noise_dbm(c.bandwidth_hz, c.gnb_noise_figure_db)),
        }
        self.cells = {}
        for d in DIRECTIONS:
            self.cells[d] = NrCell(
                self.engine, d, numerology, c.bandwidth_hz, curve,
                sinr_fn=self._sinr_fn(d),
                on_attempt=self._on_attempt,
                on_delivered=self._dl_delivered if d is Direction.DOWNLINK else self._ul_air_delivered,
                on_failed=self._on_dropped,
                max_attempts=r.max_attempts,
                combining_gain_db=r.combining_gain_db,
                harq_rtt_slots=r.harq_rtt_slots,
                efficiency_factor=r.efficiency_factor,
                se_cap=r.se_cap,
            )

        t = cfg.tsn
        self.pcp_map = {
            TrafficClass.NETWORK_CONTROL: t.pcp_nc,
            TrafficClass.VIDEO: t.pcp_video,
            TrafficClass.BEST_EFFORT: t.pcp_be,
        }
        hop_ns = to_ns(t.per_hop_latency_s)
        self.ports = {}
        for d in DIRECTIONS:
            cbs = self._cbs_for(d)
            self.ports[d] = EgressPort(
                self.engine, t.port_bitrate_bps,
                on_transmitted=self._dl_switched if d is Direction.DOWNLINK else self._ul_delivered,
                cbs=cbs, shaped_pcp=t.pcp_video, per_hop_latency_ns=hop_ns,
                keep_trace=cfg.traces, name=f"egress.{d.value}",
            )

        m = cfg.mobility
        for i in range(cfg.n_ues):
            mob = RandomWaypoint(
                self.engine, self.region, self.engine.rng_stream(f"mobility.ue{i}"),
                h_ut_m=self.chan.h_ut_m, speed_range=(m.speed_min_mps, m.speed_max_mps),
                pause=m.pause_s,
            )
            ue = Ue(i, mob)
            mob.on_leg = self._leg_callback(ue)
            self.ues.append(ue)

        self.generators: list[StreamGenerator] = []
        for d in DIRECTIONS:
            for name in ("nc", "video", "be"):
                cs = getattr(cfg.traffic, name)
                if not getattr(cs, d.value):
                    continue
                spec = TrafficSpec(TrafficClass.parse(name), cs.payload_bytes, cs.interval, cs.start_time, cs.initial_offset)
                for ue in self.ues:
                    rng = self.engine.rng_stream(f"traffic.{d.short}.ue{ue.ue_id}.{name}")
                    self.generators.append(StreamGenerator(spec, ue.ue_id, d.value, rng, pcp_map=self.pcp_map))

    # -------------------------------------------------------------- setup

    def _cbs_for(self, d: Direction) -> CbsState | None:
        t = self.cfg.tsn
        video = self.cfg.traffic.video
        n_streams = self.cfg.n_ues if getattr(video, d.value) else 0
        if t.idle_slope_bps is not None:
            idle = t.idle_slope_bps
            if not 0 < idle < t.port_bitrate_bps:
                raise ConfigError(f"tsn.idle_slope_bps: {idle} must lie in (0, port bitrate)")
            return CbsState.for_port(idle, t.port_bitrate_bps)
        if n_streams == 0:
            return None
        per_stream = stream_data_rate(encapsulate(video.payload_bytes), t.reservation_interval_s)
        try:
            idle, _ = compute_slopes(per_stream, n_streams, t.port_bitrate_bps)
        except OversubscriptionError as e:
            raise ConfigError(f"tsn: {e}") from None
        return CbsState.for_port(idle, t.port_bitrate_bps)

    def _sinr_fn(self, d: Direction):
        tx_dbm, noise = self._budget[d]
        margin = self.cfg.channel.interference_margin_db
        profile, chan, gnb, ues = self.profile, self.chan, self.gnb, self.ues
        engine = self.engine

        def sinr(ue_id: int) -> float:
            ue = ues[ue_id]
            pos = ue.mobility.position(engine.now)
            pl = pathloss(profile, ue.los, effective_d3d(gnb, pos, chan), chan.fc_ghz)
            return tx_dbm - pl - ue.shadow_db - noise - margin

        return sinr

    def _leg_callback(self, ue: Ue):
        rng = self.engine.rng_stream(f"channel.ue{ue.ue_id}")

        def on_leg(leg):
            state = draw_large_scale(self.profile, self.gnb, leg.origin, self.chan, rng)
            ue.los, ue.shadow_db = state.los, state.shadow_db
            if self.cfg.traces:
                self.positions.append((self.engine.now, ue.ue_id, leg.origin))

        return on_leg

    # ---------------------------------------------------------- data path

    def _emit_downlink(self, frame) -> None:
        self._register(frame)
        self.ports[Direction.DOWNLINK].enqueue(frame)

    def _emit_uplink(self, frame) -> None:
        self._register(frame)
        cell = self.cells[Direction.UPLINK]
        cell.submit(cell.new_block(frame, frame.ue_id, frame.wire_bits))

    def _register(self, frame) -> None:
        frame.frame_id = self._frame_ids
        self._frame_ids += 1
        self.store.count_generated(frame.cls, Direction(frame.direction))

    def _dl_switched(self, frame) -> None:
        cell = self.cells[Direction.DOWNLINK]
        cell.submit(cell.new_block(frame, frame.ue_id, frame.wire_bits))

    def _ul_air_delivered(self, tb) -> None:
        self.ports[Direction.UPLINK].enqueue(tb.frame)

    def _dl_delivered(self, tb) -> None:
        self._deliver(tb.frame)

    def _ul_delivered(self, frame) -> None:
        self._deliver(frame)

    def _deliver(self, frame) -> None:
        now = self.engine.now
        d = Direction(frame.direction)
        self.store.record(DelaySample(now, frame.ue_id, frame.cls, d, now - frame.created_at))
        self.store.count_delivered(frame.cls, d)

    def _on_dropped(self, tb) -> None:
        self.store.count_dropped(tb.frame.cls, tb.direction)

    def _on_attempt(self, tb, sinr, outcome) -> None:
        now = self.engine.now
        self.store.record(SinrSample(now, tb.ue_id, tb.direction, sinr, self.ues[tb.ue_id].los))
        self.store.record(HarqSample(now, tb.direction, outcome))

    # ---------------------------------------------------------------- run

    def run(self) -> Summary:
        for ue in self.ues:
            ue.mobility.start(self.duration_ns)
        for gen in self.generators:
            sink = self._emit_downlink if gen.direction == Direction.DOWNLINK.value else self._emit_uplink
            attach(gen, self.engine, sink, self.duration_ns)
        self.engine.run_until(self.duration_ns)
        # generators and mobility stop at the horizon; let queued frames finish
        self.engine.run_until(self.duration_ns + to_ns(self.cfg.drain_s))
        summary = summarize(self.store)
        if summary.generated != summary.delivered + summary.dropped_total + summary.in_flight:
            raise ConservationError("frame accounting does not add up")
        if summary.in_flight:
            raise ConservationError(
                f"{summary.in_flight} frames still in flight after a {self.cfg.drain_s} s drain"
            )
        self.summary = summary
        return summary

    def export(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        paths = export_csv(self.store, out_dir, self.summary)
        (out_dir / "config.yaml").write_text(config_mod.dumps(self.cfg), encoding="utf-8")
        if self.cfg.traces:
            paths += self._export_traces(out_dir)
        return paths

    def _export_traces(self, out_dir: Path) -> list[Path]:
        paths = []
        for d, port in self.ports.items():
            path = out_dir / f"egress_{d.value}.csv"
            with open(path, "w", newline="", encoding="utf-8") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(["time_s", "ue_id", "class", "pcp", "wire_bytes", "queue_wait_s", "credit_bits_after"])
                for rec in port.trace or []:
                    fr = rec.frame
                    w.writerow([fmt(rec.time_ns / 1e9), fr.ue_id, fr.cls.value, fr.pcp, fr.wire_bytes,
                                fmt(rec.queue_wait_ns / 1e9), fmt(rec.credit_bits_after)])
            paths.append(path)
        path = out_dir / "positions.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["time_s", "ue_id", "x", "y", "z"])
            for t, ue_id, p in sorted(self.positions, key=lambda r: (r[0], r[1])):
                w.writerow([fmt(t / 1e9), ue_id, fmt(p.x), fmt(p.y), fmt(p.z)])
        paths.append(path)
        return paths


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> Summary:
    sc = Scenario(cfg)
    summary = sc.run()
    if out_dir is not None:
        sc.export(out_dir)
    return summary


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class Cell:
    name: str
    cfg: ScenarioConfig
    profile: InFProfile
    n_ues: int
    region: str
    rep: int


def cell_seed(master: int, profile: InFProfile, n_ues: int, region, rep: int) -> int:
    return derive_seed(master, InFProfile.parse(profile).value, n_ues, region, rep) >> 1


def sweep_cells(sw: SweepConfig) -> list[Cell]:
    cells = []
    for prof in sw.profiles:
        for n in sw.ue_counts:
            for reg in sw.regions:
                for rep in range(sw.repetitions):
                    cfg = replace(sw.base, profile=prof, n_ues=n, region=reg,
                                  seed=cell_seed(sw.base.seed, prof, n, reg, rep))
                    cells.append(Cell(f"{prof.value}_{n}_{cfg.region_label}_{rep}", cfg, prof, n, cfg.region_label, rep))
    return cells


def _run_cell(cell: Cell, out_root: str):
    try:
        return cell.name, run_scenario(cell.cfg, Path(out_root) / cell.name), None
    except Exception as e:  # noqa: BLE001 - a failing cell must not stop the sweep
        log.exception("cell %s failed", cell.name)
        return cell.name, None, f"{type(e).__name__}: {e}"


def grid_columns() -> list[str]:
    cols = ["cell", "profile", "n_ues", "region", "rep", "seed", "status"]
    for d in DIRECTIONS:
        cols += [f"sinr_mean_db_{d.value}", f"sinr_p50_db_{d.value}", f"los_fraction_{d.value}", f"harq_error_rate_{d.value}"]
    for d in DIRECTIONS:
        for c in CLASSES:
            tag = f"{c.value}_{d.value}"
            cols += [f"delay_count_{tag}", f"delay_mean_s_{tag}", f"delay_p50_s_{tag}", f"delay_p99_s_{tag}",
                     f"delay_max_s_{tag}", f"dropped_{tag}"]
    return cols


def grid_row(cell: Cell, summary: Summary | None, error: str | None) -> list[str]:
    row = [cell.name, cell.profile.value, str(cell.n_ues), cell.region, str(cell.rep), str(cell.cfg.seed),
           "ok" if error is None else f"failed: {error}"]
    for d in DIRECTIONS:
        st = summary.sinr.get(d) if summary else None
        row += [fmt(st.mean) if st else "", fmt(st.p50) if st else "",
                fmt(summary.los_fraction.get(d)) if summary else "",
                fmt(summary.harq_error_rate.get(d)) if summary else ""]
    for d in DIRECTIONS:
        for c in CLASSES:
            st = summary.delay.get((c, d)) if summary else None
            dropped = summary.dropped.get((c, d)) if summary else None
            row += [fmt(st.count) if st else ("0" if summary else ""),
                    fmt(st.mean) if st else "", fmt(st.p50) if st else "",
                    fmt(st.p99) if st else "", fmt(st.max) if st else "", fmt(dropped)]
    return row


def _read_grid(path: Path) -> dict[str, list[str]]:
    if not path.exists():
        return {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != grid_columns():
            return {}
        return {row[0]: row for row in reader if row}


@dataclass
class SweepResult:
    summaries: dict[str, Summary | None]
    errors: dict[str, str]
    cells: list[Cell]

    @property
    def ok(self) -> bool:
        return not self.errors


def run_sweep(sw: SweepConfig, out_root, jobs: int = 1, only: set[str] | None = None) -> SweepResult:
    """Run every cell (or the subset ``only``) and write ``grid.csv`` sorted by cell name."""
    config_mod.validate_sweep(sw)
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    cells = sweep_cells(sw)
    todo = [c for c in cells if only is None or c.name in only]
    results = {}
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, c, str(out_root)) for c in todo]
            for fut in futures:
                name, summary, err = fut.result()
                results[name] = (summary, err)
    else:
        for c in todo:
            name, summary, err = _run_cell(c, str(out_root))
            results[name] = (summary, err)

    by_name = {c.name: c for c in cells}
    rows = {name: grid_row(by_name[name], summary, err) for name, (summary, err) in results.items()}
    grid = out_root / "grid.csv"
    if only is not None:
        # partial rerun: keep rows of cells that were not rerun
        for name, row in _read_grid(grid).items():
            if name in by_name:
                rows.setdefault(name, row)
    with open(grid, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(grid_columns())
        for name in sorted(rows):
            w.writerow(rows[name])
    (out_root / "sweep.yaml").write_text(config_mod.dumps(sw), encoding="utf-8")
    return SweepResult(
        summaries={n: s for n, (s, _) in results.items()},
        errors={n: e for n, (_, e) in results.items() if e is not None},
        cells=todo,
    )
