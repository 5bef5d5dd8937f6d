"""TR 38.901 indoor-factory large-scale channel: path loss, LOS probability, shadowing, SINR."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from enum import Enum

D3D_MIN_M = 1.0
D3D_MAX_M = 600.0
THERMAL_NOISE_DBM_HZ = -174.0


class ChannelValidityError(ValueError):
    """Distance or frequency outside the model's range of validity."""


class ChannelConfigError(ValueError):
    pass


class InFProfile(str, Enum):
    SL = "InF-SL"
    DL = "InF-DL"
    SH = "InF-SH"
    DH = "InF-DH"
    HH = "InF-HH"

    @classmethod
    def parse(cls, value: "str | InFProfile") -> "InFProfile":
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for p in cls:
            if text.upper() in (p.name, p.value.upper()):
                return p
        raise ValueError(f"unknown InF profile {value!r}; expected one of {[p.value for p in cls]}")

    @property
    def dense(self) -> bool:
        return self in (InFProfile.DL, InFProfile.DH)

    @property
    def high_bs(self) -> bool:
        return self in (InFProfile.SH, InFProfile.DH, InFProfile.HH)


# sigma_SF in dB; NLOS entries are per profile
SIGMA_LOS_DB = 4.0
SIGMA_NLOS_DB = {
    InFProfile.SL: 5.7,
    InFProfile.DL: 7.2,
    InFProfile.SH: 5.9,
    InFProfile.DH: 4.0,
}


@dataclass(frozen=True)
class ChannelConfig:
    fc_ghz: float = 5.9
    d_clutter_m: float = 10.0
    clutter_density_r: float = 0.2
    h_c_m: float = 2.0
    h_bs_m: float = 1.5
    h_ut_m: float = 1.5
    clamp_distances: bool = False
    shadow_sigma_db: float | None = None  # overrides the profile sigma when set

    @classmethod
    def for_profile(cls, profile: InFProfile, **overrides) -> "ChannelConfig":
        """Calibration defaults for a profile (sparse/dense clutter, low/high BS)."""
        profile = InFProfile.parse(profile)
        if profile.dense:
            base = cls(d_clutter_m=2.0, clutter_density_r=0.6, h_c_m=6.0)
        else:
            base = cls(d_clutter_m=10.0, clutter_density_r=0.2, h_c_m=2.0)
        base = replace(base, h_bs_m=8.0 if profile.high_bs else 1.5)
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(base, **overrides)

    def validate(self, profile: InFProfile | None = None) -> None:
        if not self.fc_ghz > 0:
            raise ChannelConfigError(f"fc_ghz must be > 0, got {self.fc_ghz}")
        if not 0 < self.clutter_density_r < 1:
            raise ChannelConfigError(f"clutter_density_r must be in (0, 1), got {self.clutter_density_r}")
        if not self.d_clutter_m > 0:
            raise ChannelConfigError(f"d_clutter_m must be > 0, got {self.d_clutter_m}")
        if self.shadow_sigma_db is not None and self.shadow_sigma_db < 0:
            raise ChannelConfigError("shadow_sigma_db must be >= 0")
        if profile in (InFProfile.SH, InFProfile.DH):
            if not self.h_c_m > self.h_ut_m:
                raise ChannelConfigError(
                    f"{profile.value} needs h_c > h_UT (h_c={self.h_c_m}, h_UT={self.h_ut_m})"
                )
            if not self.h_bs_m > self.h_c_m:
                raise ChannelConfigError(
                    f"{profile.value} needs h_BS > h_c (h_BS={self.h_bs_m}, h_c={self.h_c_m})"
                )


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if self.z < 0:
            raise ValueError(f"z must be >= 0, got {self.z}")

    def distance_2d(self, other: "Position3D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def distance_3d(self, other: "Position3D") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass
class LargeScaleState:
    los: bool
    shadow_db: float
    pathloss_db: float


def _check_range(d3d_m: float, fc_ghz: float) -> None:
    if not D3D_MIN_M <= d3d_m <= D3D_MAX_M:
        raise ChannelValidityError(f"d3D={d3d_m} m outside [{D3D_MIN_M}, {D3D_MAX_M}] m")
    if not fc_ghz > 0:
        raise ChannelValidityError(f"carrier frequency must be > 0 GHz, got {fc_ghz}")


def pathloss_los(d3d_m: float, fc_ghz: float) -> float:
    _check_range(d3d_m, fc_ghz)
    return 31.84 + 21.5 * math.log10(d3d_m) + 19.0 * math.log10(fc_ghz)


def _nlos_sl(log_d: float, log_f: float) -> float:
    return 33.0 + 25.5 * log_d + 20.0 * log_f


def pathloss_nlos(profile: InFProfile, d3d_m: float, fc_ghz: float) -> float:
    """NLOS path loss in dB, lower-bounded by LOS (and by InF-SL for InF-DL)."""
    profile = InFProfile.parse(profile)
    if profile is InFProfile.HH:
        raise ValueError("InF-HH is LOS-only; there is no NLOS path loss")
    pl_los = pathloss_los(d3d_m, fc_ghz)
    log_d = math.log10(d3d_m)
    log_f = math.log10(fc_ghz)
    if profile is InFProfile.SL:
        return max(_nlos_sl(log_d, log_f), pl_los)
    if profile is InFProfile.DL:
        return max(18.6 + 35.7 * log_d + 20.0 * log_f, pl_los, _nlos_sl(log_d, log_f))
    if profile is InFProfile.SH:
        return max(32.4 + 23.0 * log_d + 20.0 * log_f, pl_los)
    return max(33.63 + 21.9 * log_d + 20.0 * log_f, pl_los)


def los_decay_length(profile: InFProfile, cfg: ChannelConfig) -> float:
    """Distance k (m) at which the LOS probability falls to 1/e. Infinite for InF-HH."""
    return _decay_length(InFProfile.parse(profile), cfg)


@functools.lru_cache(maxsize=256)
def _decay_length(profile: InFProfile, cfg: ChannelConfig) -> float:
    if profile is InFProfile.HH:
        return math.inf
    cfg.validate(profile)
    k = -cfg.d_clutter_m / math.log(1.0 - cfg.clutter_density_r)
    if profile in (InFProfile.SH, InFProfile.DH):
        k *= (cfg.h_bs_m - cfg.h_ut_m) / (cfg.h_c_m - cfg.h_ut_m)
    return k


def los_probability(profile: InFProfile, d2d_m: float, cfg: ChannelConfig) -> float:
    if d2d_m < 0:
        raise ValueError(f"d2D must be >= 0, got {d2d_m}")
    k = los_decay_length(profile, cfg)
    if math.isinf(k):
        return 1.0
    return math.exp(-d2d_m / k)


def shadow_sigma(profile: InFProfile, los: bool, cfg: ChannelConfig | None = None) -> float:
    if cfg is not None and cfg.shadow_sigma_db is not None:
        return cfg.shadow_sigma_db
    if los:
        return SIGMA_LOS_DB
    return SIGMA_NLOS_DB[InFProfile.parse(profile)]


def effective_d3d(tx: Position3D, rx: Position3D, cfg: ChannelConfig) -> float:
    d3d = tx.distance_3d(rx)
    if cfg.clamp_distances and d3d < D3D_MIN_M:
        return D3D_MIN_M
    return d3d


def pathloss(profile: InFProfile, los: bool, d3d_m: float, fc_ghz: float) -> float:
    if los:
        return pathloss_los(d3d_m, fc_ghz)
    return pathloss_nlos(profile, d3d_m, fc_ghz)


def draw_large_scale(
    profile: InFProfile,
    tx: Position3D,
    rx: Position3D,
    cfg: ChannelConfig,
    rng,
    force_los: bool | None = None,
) -> LargeScaleState:
    """Draw LOS state and shadow fading for a link and evaluate its path loss.

    ``rng`` needs ``random()`` and ``gauss(mu, sigma)``. ``force_los`` pins
    the LOS state (the Bernoulli draw is still consumed to keep streams aligned).
    """
    profile = InFProfile.parse(profile)
    d3d = effective_d3d(tx, rx, cfg)
    _check_range(d3d, cfg.fc_ghz)
    p_los = los_probability(profile, tx.distance_2d(rx), cfg)
    los = rng.random() < p_los
    if force_los is not None:
        los = force_los
    if profile is InFProfile.HH:
        los = True
    sigma = shadow_sigma(profile, los, cfg)
    shadow = rng.gauss(0.0, sigma) if sigma > 0 else 0.0
    return LargeScaleState(los=los, shadow_db=shadow, pathloss_db=pathloss(profile, los, d3d, cfg.fc_ghz))


def noise_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def sinr_db(tx_power_dbm: float, state: LargeScaleState, noise_dbm: float, interference_margin_db: float = 0.0) -> float:
    # single cell: thermal noise plus an optional fixed margin, no co-channel interferers
    return tx_power_dbm - state.pathloss_db - state.shadow_db - noise_dbm - interference_margin_db
