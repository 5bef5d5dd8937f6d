import statistics

import pytest
from hypothesis import given, settings, strategies as st

from inf5gtsn.engine import Engine, RngStream, to_ns
from inf5gtsn.traffic import Dist, StreamGenerator, TrafficSpec, attach, default_specs, first_emission, next_frame
from inf5gtsn.tsn import TrafficClass

NC, VIDEO, BE = default_specs()


def gen(spec, seed=1, name="t"):
    return StreamGenerator(spec, 0, "downlink", RngStream(seed, name))


def test_table_values():
    assert (NC.cls, NC.payload_bytes, NC.interval) == (TrafficClass.NETWORK_CONTROL, 498, Dist.const(0.055))
    assert (VIDEO.payload_bytes, VIDEO.interval) == (1453, Dist.uniform(0.060, 0.065))
    assert (BE.payload_bytes, BE.interval.kind, BE.interval.mean) == (1429, "exponential", 0.6)
    assert VIDEO.start_time.support == (0.2, 0.5)
    assert BE.initial_offset.support == (0.0, 0.1)


def test_video_interval_statistics():
    rng = RngStream(3, "video")
    xs = [VIDEO.interval.sample(rng) for _ in range(100_000)]
    assert min(xs) >= 0.060 and max(xs) <= 0.065
    assert abs(statistics.fmean(xs) - 0.0625) < 1e-4


def test_be_interval_mean_and_cv():
    rng = RngStream(4, "be")
    xs = [BE.interval.sample(rng) for _ in range(100_000)]
    m = statistics.fmean(xs)
    assert abs(m - 0.600) < 0.010
    assert abs(statistics.pstdev(xs) / m - 1.0) < 0.02


def test_degenerate_first_emission():
    spec = TrafficSpec(TrafficClass.NETWORK_CONTROL, 498, Dist.const(0.055), Dist.const(0.0), Dist.const(0.0))
    assert first_emission(gen(spec)) == 0


@pytest.mark.parametrize("spec,hi", [(NC, 0.105), (VIDEO, 0.52), (BE, 1.1)])
def test_first_emission_support(spec, hi):
    lo = spec.start_time.support[0]
    for seed in range(300):
        t = first_emission(gen(spec, seed))
        assert to_ns(lo) <= t <= to_ns(hi)


def test_nc_is_periodic():
    g = gen(NC)
    t0, f0 = next_frame(g)
    times = [next_frame(g)[0] for _ in range(3)]
    assert times == [t0 + to_ns(0.055) * k for k in (1, 2, 3)]
    assert f0.wire_bytes == 552 and f0.pcp == 7 and f0.created_at == t0


def test_video_gaps_in_range():
    g = gen(VIDEO, 9)
    times = [next_frame(g)[0] for _ in range(2000)]
    gaps = [b - a for a, b in zip(times, times[1:])]
    assert min(gaps) >= to_ns(0.060) and max(gaps) <= to_ns(0.065)


def test_sequences_gapless_from_zero():
    g = gen(BE, 2)
    seqs = [next_frame(g)[1].sequence for _ in range(50)]
    assert seqs == list(range(50))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0, 1, 2]))
def test_emissions_strictly_increasing(seed, idx):
    g = gen(default_specs()[idx], seed)
    times = [next_frame(g)[0] for _ in range(200)]
    assert all(b > a for a, b in zip(times, times[1:]))


def test_zero_mean_exponential_still_advances():
    spec = TrafficSpec(TrafficClass.BEST_EFFORT, 100, Dist.exponential(0.0), Dist.const(0.0), Dist.const(0.0))
    g = gen(spec)
    times = [next_frame(g)[0] for _ in range(5)]
    assert times == [0, 1, 2, 3, 4]


def test_attach_stops_at_horizon():
    eng = Engine(seed=1)
    got = []
    g = StreamGenerator(NC, 3, "uplink", eng.rng_stream("x"))
    attach(g, eng, got.append, to_ns(1.0))
    eng.run_until(to_ns(2.0))
    assert got and all(f.created_at < to_ns(1.0) for f in got)
    assert got[0].stream_id == "uplink.ue3.nc"
    # 55 ms period: 17 or 18 frames fit after a start below 105 ms
    assert 16 <= len(got) <= 19


def test_dist_config_round_trip():
    for d in (Dist.const(0.055), Dist.uniform(0.06, 0.065), Dist.exponential(0.6)):
        assert Dist.from_config(d.to_config()) == d
    assert Dist.from_config(0.1) == Dist.const(0.1)
    with pytest.raises(ValueError):
        Dist.from_config({"normal": [0, 1]})
    with pytest.raises(ValueError):
        Dist.uniform(2, 1)
    with pytest.raises(ValueError):
        TrafficSpec(TrafficClass.VIDEO, 0, Dist.const(1), Dist.const(0), Dist.const(0))
