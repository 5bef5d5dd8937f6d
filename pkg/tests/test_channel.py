import math
import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from inf5gtsn.channel import (
    ChannelConfig,
    ChannelConfigError,
    ChannelValidityError,
    InFProfile,
    LargeScaleState,
    Position3D,
    draw_large_scale,
    effective_d3d,
    los_decay_length,
    los_probability,
    noise_dbm,
    pathloss_los,
    pathloss_nlos,
    shadow_sigma,
    sinr_db,
)

NLOS_PROFILES = [InFProfile.SL, InFProfile.DL, InFProfile.SH, InFProfile.DH]
distances = st.floats(min_value=1.0, max_value=600.0)
freqs = st.floats(min_value=0.5, max_value=100.0)


# reference values below were evaluated with mpmath at 50 digits

def test_los_reference_points():
    assert pathloss_los(1.0, 1.0) == pytest.approx(31.84, abs=1e-12)
    assert pathloss_los(100.0, 5.9) == pytest.approx(89.486188221200739, abs=1e-9)
    assert pathloss_los(600.0, 5.9) == pytest.approx(106.216440104449078, abs=1e-9)


def test_nlos_reference_points():
    assert pathloss_nlos(InFProfile.SL, 1.0, 1.0) == pytest.approx(33.0, abs=1e-12)
    dl = pathloss_nlos(InFProfile.DL, 100.0, 5.9)
    assert dl == pytest.approx(105.417040232842884, abs=1e-9)
    assert dl > pathloss_nlos(InFProfile.SL, 100.0, 5.9) == pytest.approx(99.417040232842884, abs=1e-9)
    assert pathloss_nlos(InFProfile.DH, 100.0, 5.9) == pytest.approx(92.847040232842884, abs=1e-9)
    assert pathloss_nlos(InFProfile.SH, 100.0, 5.9) == pytest.approx(93.817040232842884, abs=1e-9)


@pytest.mark.parametrize("d", [0.999, 0.0, 600.01, 1e4])
def test_out_of_validity_raises(d):
    with pytest.raises(ChannelValidityError):
        pathloss_los(d, 5.9)
    with pytest.raises(ChannelValidityError):
        pathloss_nlos(InFProfile.SL, d, 5.9)


def test_hh_has_no_nlos_branch():
    with pytest.raises(ValueError):
        pathloss_nlos(InFProfile.HH, 10.0, 5.9)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(NLOS_PROFILES), distances, freqs)
def test_nlos_never_below_los(profile, d, f):
    assert pathloss_nlos(profile, d, f) >= pathloss_los(d, f)


@settings(max_examples=300, deadline=None)
@given(distances, freqs)
def test_dense_low_dominates_sparse_low(d, f):
    assert pathloss_nlos(InFProfile.DL, d, f) >= pathloss_nlos(InFProfile.SL, d, f)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(NLOS_PROFILES), distances, distances, freqs)
def test_pathloss_increases_with_distance(profile, d1, d2, f):
    lo, hi = sorted((d1, d2))
    if hi - lo < 1e-6:
        return
    assert pathloss_los(lo, f) < pathloss_los(hi, f)
    assert pathloss_nlos(profile, lo, f) < pathloss_nlos(profile, hi, f)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(NLOS_PROFILES), distances, freqs, freqs)
def test_pathloss_increases_with_frequency(profile, d, f1, f2):
    lo, hi = sorted((f1, f2))
    if hi - lo < 1e-6:
        return
    assert pathloss_los(d, lo) < pathloss_los(d, hi)
    assert pathloss_nlos(profile, d, lo) < pathloss_nlos(profile, d, hi)


def test_los_decay_length_sparse():
    cfg = ChannelConfig.for_profile(InFProfile.SL)
    assert los_decay_length(InFProfile.SL, cfg) == pytest.approx(44.814201177245498, abs=1e-12)
    assert los_probability(InFProfile.SL, 44.814201177245498, cfg) == pytest.approx(math.exp(-1), abs=1e-12)


def test_los_probability_elevated_bs():
    cfg = ChannelConfig(d_clutter_m=10, clutter_density_r=0.2, h_bs_m=8, h_ut_m=1.5, h_c_m=6)
    assert los_probability(InFProfile.SH, 100.0, cfg) == pytest.approx(0.213346010117362, abs=1e-12)


@pytest.mark.parametrize("profile", list(InFProfile))
def test_los_probability_at_origin(profile):
    assert los_probability(profile, 0.0, ChannelConfig.for_profile(profile)) == 1.0


def test_hh_always_los():
    cfg = ChannelConfig.for_profile(InFProfile.HH)
    assert los_probability(InFProfile.HH, 500.0, cfg) == 1.0
    rng = random.Random(1)
    gnb, ue = Position3D(0, 0, 8), Position3D(200, 0, 1.5)
    assert all(draw_large_scale(InFProfile.HH, gnb, ue, cfg, rng).los for _ in range(200))


def test_elevated_profiles_reject_bad_heights():
    cfg = ChannelConfig(h_c_m=1.0, h_ut_m=1.5, h_bs_m=8.0)
    with pytest.raises(ChannelConfigError):
        los_probability(InFProfile.DH, 10.0, cfg)
    cfg = ChannelConfig(h_c_m=10.0, h_ut_m=1.5, h_bs_m=8.0)
    with pytest.raises(ChannelConfigError):
        los_probability(InFProfile.SH, 10.0, cfg)


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(list(InFProfile)),
    st.floats(min_value=0.1, max_value=50),
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0, max_value=600),
    st.floats(min_value=0, max_value=600),
)
def test_los_probability_monotone_and_bounded(profile, d_clutter, r, a, b):
    cfg = ChannelConfig(d_clutter_m=d_clutter, clutter_density_r=r, h_c_m=4.0, h_bs_m=9.0, h_ut_m=1.5)
    lo, hi = sorted((a, b))
    p_lo, p_hi = los_probability(profile, lo, cfg), los_probability(profile, hi, cfg)
    assert 0.0 <= p_hi <= p_lo <= 1.0


def test_shadow_sigma_table():
    assert shadow_sigma(InFProfile.DL, True) == 4.0
    assert [shadow_sigma(p, False) for p in NLOS_PROFILES] == [5.7, 7.2, 5.9, 4.0]


def test_zero_sigma_override_gives_zero_shadowing():
    cfg = ChannelConfig.for_profile(InFProfile.SL, shadow_sigma_db=0.0)
    rng = random.Random(3)
    for _ in range(50):
        st_ = draw_large_scale(InFProfile.SL, Position3D(0, 0, 1.5), Position3D(30, 40, 1.5), cfg, rng)
        assert st_.shadow_db == 0.0


def test_forced_nlos_shadow_statistics_dense_low():
    cfg = ChannelConfig.for_profile(InFProfile.DL)
    rng = random.Random(2024)
    gnb, ue = Position3D(0, 0, 1.5), Position3D(50, 0, 1.5)
    xs = [draw_large_scale(InFProfile.DL, gnb, ue, cfg, rng, force_los=False).shadow_db for _ in range(100_000)]
    assert abs(statistics.pstdev(xs) - 7.2) < 0.1
    assert abs(statistics.fmean(xs)) < 0.05


def test_draw_reports_matching_pathloss():
    cfg = ChannelConfig.for_profile(InFProfile.SL)
    rng = random.Random(5)
    gnb, ue = Position3D(0, 0, 1.5), Position3D(60, 80, 1.5)
    for _ in range(100):
        s = draw_large_scale(InFProfile.SL, gnb, ue, cfg, rng)
        expect = pathloss_los(100.0, 5.9) if s.los else pathloss_nlos(InFProfile.SL, 100.0, 5.9)
        assert s.pathloss_db == pytest.approx(expect)


def test_clamping_only_when_enabled():
    a, b = Position3D(0, 0, 1.5), Position3D(0.3, 0, 1.5)
    assert effective_d3d(a, b, ChannelConfig()) == pytest.approx(0.3)
    assert effective_d3d(a, b, ChannelConfig(clamp_distances=True)) == 1.0
    with pytest.raises(ChannelValidityError):
        draw_large_scale(InFProfile.SL, a, b, ChannelConfig(), random.Random(0))


def test_negative_height_rejected():
    with pytest.raises(ValueError):
        Position3D(0, 0, -0.1)


def test_sinr_link_budget():
    n = noise_dbm(40e6, 5.0)
    assert n == pytest.approx(-92.979400086720376, abs=1e-9)
    state = LargeScaleState(True, 0.0, 89.486)
    assert sinr_db(23.0, state, -92.98) == pytest.approx(26.494, abs=1e-9)


def test_sinr_is_linear_in_db():
    base = sinr_db(23.0, LargeScaleState(False, 0.0, 100.0), -90.0)
    assert sinr_db(23.0, LargeScaleState(False, 0.0, 110.0), -90.0) == pytest.approx(base - 10.0)
    up = sinr_db(23.0, LargeScaleState(False, 5.7, 100.0), -90.0)
    down = sinr_db(23.0, LargeScaleState(False, -5.7, 100.0), -90.0)
    assert down - up == pytest.approx(11.4)
    assert sinr_db(23.0, LargeScaleState(False, 0.0, 100.0), -90.0, interference_margin_db=3.0) == pytest.approx(base - 3.0)


def test_profile_parsing():
    assert InFProfile.parse("sl") is InFProfile.SL
    assert InFProfile.parse("InF-DH") is InFProfile.DH
    with pytest.raises(ValueError):
        InFProfile.parse("InF-XX")
