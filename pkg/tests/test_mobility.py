import math
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from inf5gtsn.channel import Position3D
from inf5gtsn.engine import Engine, RngStream, to_ns
from inf5gtsn.mobility import REGION_RADII_M, MobilityLeg, RandomWaypoint, Region, position_at, sample_waypoint

ORIGIN = Position3D(0.0, 0.0, 0.0)


def test_named_regions():
    assert REGION_RADII_M == {"d1": 85.0, "d2": 170.0, "d3": 255.0}
    assert Region.named("d2").radius_m == 170.0
    assert Region.named(42.5).radius_m == 42.5
    with pytest.raises(ValueError):
        Region.named("d4")


def test_waypoints_are_area_uniform():
    region = Region.named("d2", ORIGIN)
    rng = RngStream(1, "wp")
    pts = [sample_waypoint(region, rng) for _ in range(100_000)]
    dists = [math.hypot(p.x, p.y) for p, _ in pts]
    assert max(dists) <= 170.0
    assert abs(statistics.fmean(dists) - 2 / 3 * 170) < 1.0
    speeds = [s for _, s in pts]
    assert min(speeds) >= 0.2 and max(speeds) <= 1.5
    assert all(p.z == 1.5 for p, _ in pts[:100])


def test_zero_radius_region_collapses_to_center():
    region = Region(Position3D(3.0, 4.0, 0.0), 0.0)
    rng = RngStream(2, "wp")
    for _ in range(50):
        p, _ = sample_waypoint(region, rng)
        assert (p.x, p.y) == (3.0, 4.0)


def test_position_interpolation():
    leg = MobilityLeg(Position3D(0, 0, 1.5), Position3D(10, 0, 1.5), 1.0, 0)
    assert position_at(leg, 0) == leg.origin
    mid = position_at(leg, to_ns(5))
    assert (mid.x, mid.y) == pytest.approx((5.0, 0.0))
    assert position_at(leg, to_ns(30)) == leg.target
    assert leg.arrive_at == to_ns(10)


def _walk(seed, radius, horizon_s):
    eng = Engine(seed=seed)
    legs = []
    rwp = RandomWaypoint(eng, Region(ORIGIN, radius), eng.rng_stream("m"), on_leg=legs.append)
    rwp.start(to_ns(horizon_s))
    return eng, rwp, legs


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(5.0, 255.0))
def test_walk_stays_inside_and_is_continuous(seed, radius):
    eng, rwp, legs = _walk(seed, radius, 600)
    samples = []
    t = 0
    while t <= to_ns(600):
        eng.run_until(t)
        p = rwp.position()
        assert math.hypot(p.x, p.y) <= radius + 1e-9
        samples.append(p)
        t += to_ns(2.5)
    for a, b in zip(legs, legs[1:]):
        assert a.target == b.origin
        assert b.depart_at == a.arrive_at
        assert 0.2 <= b.speed_mps <= 1.5
    # no jumps larger than max speed times the sampling step
    for a, b in zip(samples, samples[1:]):
        assert a.distance_2d(b) <= 1.5 * 2.5 + 1e-6


def test_leg_callback_fires_per_leg():
    eng, rwp, legs = _walk(3, 20.0, 300)
    eng.run_until(to_ns(300))
    assert len(legs) == rwp.legs >= 2
    assert legs[-1].depart_at <= to_ns(300)
