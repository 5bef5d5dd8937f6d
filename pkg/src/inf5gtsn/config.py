"""Scenario and sweep configuration: YAML schema, defaults, validation and round-tripping.

Every key is optional; omitted keys take the defaults below. Unknown keys are
rejected with the offending key path and line number. A top-level ``sweep``
section turns the file into a sweep; the remaining keys form the base scenario.
"""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .channel import ChannelConfig, InFProfile
from .mobility import REGION_RADII_M
from .traffic import Dist


class ConfigError(ValueError):
    pass


def _bler_anchor_sinr() -> float:
    # SINR at which the default logistic (s50 = 3 dB, slope 1/dB) reaches 1 % BLER
    return 3.0 + math.log(99.0)


@dataclass
class ChannelSettings:
    fc_ghz: float = 5.9
    # None -> profile default (sparse/dense clutter, low/high BS)
    d_clutter_m: float | None = None
    clutter_density_r: float | None = None
    h_c_m: float | None = None
    h_bs_m: float | None = None
    h_ut_m: float | None = None
    shadow_sigma_db: float | None = None
    clamp_distances: bool = True
    bandwidth_hz: float = 40e6
    ue_noise_figure_db: float = 5.0
    gnb_noise_figure_db: float = 7.0
    interference_margin_db: float = 0.0


@dataclass
class RadioSettings:
    bler_slope_per_db: float = 1.0
    bler_target_sinr_db: float = field(default_factory=_bler_anchor_sinr)
    forced_bler: float | None = None
    efficiency_factor: float = 0.75
    se_cap: float = 7.4
    max_attempts: int = 4
    combining_gain_db: float = 3.0
    harq_rtt_slots: int = 8


@dataclass
class TsnSettings:
    port_bitrate_bps: float = 100e6
    reservation_interval_s: float = 0.060
    idle_slope_bps: float | None = None  # None -> n_ues x per-stream video rate
    per_hop_latency_s: float = 0.0
    pcp_nc: int = 7
    pcp_video: int = 5
    pcp_be: int = 0


@dataclass
class ClassSettings:
    payload_bytes: int
    interval: Dist
    start_time: Dist
    initial_offset: Dist
    downlink: bool = True
    uplink: bool = True


def _nc() -> ClassSettings:
    return ClassSettings(498, Dist.const(0.055), Dist.uniform(0.0, 0.1), Dist.uniform(0.0, 0.005))


def _video() -> ClassSettings:
    return ClassSettings(1453, Dist.uniform(0.060, 0.065), Dist.uniform(0.2, 0.5), Dist.uniform(0.0, 0.020))


def _be() -> ClassSettings:
    return ClassSettings(1429, Dist.exponential(0.600), Dist.uniform(0.5, 1.0), Dist.uniform(0.0, 0.100))


@dataclass
class TrafficSettings:
    nc: ClassSettings = field(default_factory=_nc)
    video: ClassSettings = field(default_factory=_video)
    be: ClassSettings = field(default_factory=_be)


@dataclass
class MobilitySettings:
    speed_min_mps: float = 0.2
    speed_max_mps: float = 1.5
    pause_s: Dist = field(default_factory=lambda: Dist.const(0.0))


@dataclass
class ScenarioConfig:
    profile: InFProfile = InFProfile.SL
    n_ues: int = 5
    region: str | float = "d2"
    seed: int = 1
    duration_s: float = 10.0
    tx_power_dbm: float = 23.0
    ue_tx_power_dbm: float = 23.0
    target_bler: float = 0.01
    numerology: int = 4
    warmup_exclude: bool = False
    warmup_s: float = 1.5
    drain_s: float = 60.0
    traces: bool = False
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    radio: RadioSettings = field(default_factory=RadioSettings)
    tsn: TsnSettings = field(default_factory=TsnSettings)
    traffic: TrafficSettings = field(default_factory=TrafficSettings)
    mobility: MobilitySettings = field(default_factory=MobilitySettings)

    @property
    def region_radius_m(self) -> float:
        if isinstance(self.region, str):
            return REGION_RADII_M[self.region]
        return float(self.region)

    @property
    def region_label(self) -> str:
        return self.region if isinstance(self.region, str) else f"r{format(self.region, 'g')}"

    def channel_config(self) -> ChannelConfig:
        c = self.channel
        return ChannelConfig.for_profile(
            self.profile,
            fc_ghz=c.fc_ghz,
            d_clutter_m=c.d_clutter_m,
            clutter_density_r=c.clutter_density_r,
            h_c_m=c.h_c_m,
            h_bs_m=c.h_bs_m,
            h_ut_m=c.h_ut_m,
            shadow_sigma_db=c.shadow_sigma_db,
            clamp_distances=c.clamp_distances,
        )


@dataclass
class SweepConfig:
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    profiles: list[InFProfile] = field(
        default_factory=lambda: [InFProfile.SL, InFProfile.DL, InFProfile.SH, InFProfile.DH]
    )
    ue_counts: list[int] = field(default_factory=lambda: [5, 10, 25, 50])
    regions: list[str | float] = field(default_factory=lambda: ["d2"])
    repetitions: int = 1


# ---------------------------------------------------------------- validation


def _err(path: str, msg: str, lines: dict[str, int]) -> ConfigError:
    line = lines.get(path)
    where = f" (line {line})" if line else ""
    return ConfigError(f"{path}{where}: {msg}")


def validate(cfg: ScenarioConfig, lines: dict[str, int] | None = None) -> ScenarioConfig:
    lines = lines or {}

    def need(ok: bool, path: str, msg: str):
        if not ok:
            raise _err(path, msg, lines)

    need(cfg.n_ues >= 1, "n_ues", "must be >= 1")
    need(cfg.duration_s > 0, "duration_s", "must be > 0")
    need(0 < cfg.target_bler < 1, "target_bler", "must be in (0, 1)")
    need(cfg.numerology >= 0, "numerology", "must be >= 0")
    need(cfg.warmup_s >= 0, "warmup_s", "must be >= 0")
    need(cfg.drain_s >= 0, "drain_s", "must be >= 0")
    need(
        (isinstance(cfg.region, str) and cfg.region in REGION_RADII_M)
        or (not isinstance(cfg.region, str) and cfg.region > 0),
        "region", "must be d1, d2, d3 or a positive radius in meters",
    )
    c = cfg.channel
    need(c.bandwidth_hz > 0, "channel.bandwidth_hz", "must be > 0")
    try:
        cfg.channel_config().validate(cfg.profile)
    except ValueError as e:
        raise _err("channel", str(e), lines) from None
    r = cfg.radio
    need(r.bler_slope_per_db > 0, "radio.bler_slope_per_db", "must be > 0")
    need(r.forced_bler is None or 0 <= r.forced_bler <= 1, "radio.forced_bler", "must be in [0, 1]")
    need(r.efficiency_factor > 0, "radio.efficiency_factor", "must be > 0")
    need(r.se_cap > 0, "radio.se_cap", "must be > 0")
    need(r.max_attempts >= 1, "radio.max_attempts", "must be >= 1")
    need(r.harq_rtt_slots >= 1, "radio.harq_rtt_slots", "must be >= 1")
    t = cfg.tsn
    need(t.port_bitrate_bps > 0, "tsn.port_bitrate_bps", "must be > 0")
    need(t.reservation_interval_s > 0, "tsn.reservation_interval_s", "must be > 0")
    need(t.per_hop_latency_s >= 0, "tsn.per_hop_latency_s", "must be >= 0")
    for name in ("pcp_nc", "pcp_video", "pcp_be"):
        need(0 <= getattr(t, name) <= 7, f"tsn.{name}", "must be in 0..7")
    need(len({t.pcp_nc, t.pcp_video, t.pcp_be}) == 3, "tsn", "PCP values of the three classes must differ")
    for name in ("nc", "video", "be"):
        cs = getattr(cfg.traffic, name)
        need(cs.payload_bytes > 0, f"traffic.{name}.payload_bytes", "must be > 0")
        need(cs.interval.kind == "exponential" or cs.interval.support[0] > 0,
             f"traffic.{name}.interval", "must be strictly positive")
    m = cfg.mobility
    need(0 < m.speed_min_mps <= m.speed_max_mps, "mobility", "need 0 < speed_min_mps <= speed_max_mps")
    return cfg


def validate_sweep(sw: SweepConfig, lines: dict[str, int] | None = None) -> SweepConfig:
    lines = lines or {}
    validate(sw.base, lines)
    for key in ("profiles", "ue_counts", "regions"):
        if not getattr(sw, key):
            raise _err(f"sweep.{key}", "must not be empty", lines)
    if sw.repetitions < 1:
        raise _err("sweep.repetitions", "must be >= 1", lines)
    for i, n in enumerate(sw.ue_counts):
        if n < 1:
            raise _err("sweep.ue_counts", f"entry {i} must be >= 1", lines)
    for prof in sw.profiles:
        validate(replace(sw.base, profile=prof), lines)
    for reg in sw.regions:
        validate(replace(sw.base, region=reg), lines)
    return sw


# ------------------------------------------------------------------ parsing


def _line_map(node, prefix: str = "", out: dict[str, int] | None = None) -> dict[str, int]:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _line_map(v, path, out)
    return out


def _convert(tp, value, path: str, lines: dict[str, int]):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    try:
        if tp is Dist:
            return Dist.from_config(value)
        if dataclasses.is_dataclass(tp):
            return _build(tp, value, path, lines)
        if origin in (typing.Union, types.UnionType):
            if value is None and type(None) in args:
                return None
            non_none = [a for a in args if a is not type(None)]
            if set(non_none) == {str, float}:  # region-like: name or radius
                if isinstance(value, str):
                    try:
                        return float(value)
                    except ValueError:
                        return value
                return _convert(float, value, path, lines)
            return _convert(non_none[0], value, path, lines)
        if origin is list:
            if not isinstance(value, list):
                value = [value]
            return [_convert(args[0], v, f"{path}[{i}]", lines) for i, v in enumerate(value)]
        if tp is bool:
            if not isinstance(value, bool):
                raise TypeError("expected true/false")
            return value
        if tp is int:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                raise TypeError("expected an integer")
            return int(value)
        if tp is float:
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if tp is str:
            return str(value)
        if tp is InFProfile:
            return InFProfile.parse(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise _err(path, f"{e} (got {value!r})", lines) from None
    raise _err(path, f"unsupported type {tp}", lines)


def _build(cls, data, path: str, lines: dict[str, int], base=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise _err(path or "<root>", "expected a mapping", lines)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    for key in data:
        if key not in names:
            full = f"{path}.{key}" if path else str(key)
            raise _err(full, f"unknown key (allowed: {', '.join(sorted(names))})", lines)
    obj = base if base is not None else cls()
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        full = f"{path}.{f.name}" if path else f.name
        tp = hints[f.name]
        if dataclasses.is_dataclass(tp) and tp is not Dist:
            kwargs[f.name] = _build(tp, data[f.name], full, lines, base=getattr(obj, f.name))
        else:
            kwargs[f.name] = _convert(tp, data[f.name], full, lines)
    return replace(obj, **kwargs)


def loads(text: str) -> ScenarioConfig | SweepConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML: {e}") from None
    lines = _line_map(node) if node is not None else {}
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    sweep = data.pop("sweep", None)
    base = _build(ScenarioConfig, data, "", lines)
    if sweep is None:
        return validate(base, lines)
    if not isinstance(sweep, dict):
        raise _err("sweep", "expected a mapping", lines)
    if "base" in sweep:
        raise _err("sweep.base", "unknown key (scenario keys belong at the top level)", lines)
    sw = _build(SweepConfig, sweep, "sweep", lines, base=SweepConfig(base=base))
    return validate_sweep(sw, lines)


def parse_config(path) -> ScenarioConfig | SweepConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        return loads(text)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None


# ------------------------------------------------------------ serialization


def _plain(value):
    if isinstance(value, Dist):
        return value.to_config()
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, InFProfile):
        return value.value
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg: ScenarioConfig | SweepConfig) -> dict:
    if isinstance(cfg, SweepConfig):
        out = _plain(cfg.base)
        out["sweep"] = {k: v for k, v in _plain(cfg).items() if k != "base"}
        return out
    return _plain(cfg)


def dumps(cfg: ScenarioConfig | SweepConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)
