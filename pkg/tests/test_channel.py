import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uav_ic_planner.channel import (a2g_gain, a2g_gain_points, gu_rate_ic,
                                    gu_rate_tin, log2_1p, uav_rate)

from conftest import make_channel, make_site

CH = make_channel()  # beta0 = 1e-3, alpha = 2


def test_a2g_gain_overhead():
    site = make_site(pos=(0.0, 0.0))
    assert a2g_gain((0.0, 0.0), site, CH, 100.0) == pytest.approx(1e-7,
                                                                  rel=1e-12)
    assert a2g_gain((100.0, 0.0), site, CH, 100.0) == pytest.approx(5e-8,
                                                                    rel=1e-12)


def test_a2g_gain_decreasing_with_offset():
    site = make_site(pos=(0.0, 0.0))
    gains = [a2g_gain((x, 0.0), site, CH, 100.0)
             for x in (0.0, 50.0, 200.0, 1000.0, 1e5)]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    assert gains[-1] < 1e-13


def test_a2g_gain_points_matches_scalar(rng):
    import numpy as np
    pts = rng.uniform(-500, 500, size=(40, 2))
    site_pos = rng.uniform(-500, 500, size=(3, 2))
    gains = a2g_gain_points(pts, site_pos, CH, 100.0)
    for i in range(40):
        for k in range(3):
            site = make_site(pos=tuple(site_pos[k]))
            assert gains[i, k] == pytest.approx(
                a2g_gain(pts[i], site, CH, 100.0), rel=1e-12)


def test_uav_rate_values():
    # h = 1e-7 directly overhead at H=100; sigma2 = 1e-8
    site = make_site(pos=(0.0, 0.0), g=1e-7, sigma2=1e-8)
    u = (0.0, 0.0)
    assert uav_rate(1.0, u, 0.0, site, CH, 100.0) == pytest.approx(
        math.log2(11), rel=1e-12)
    assert uav_rate(0.0, u, 0.0, site, CH, 100.0) == 0.0
    assert uav_rate(1.0, u, 0.3, site, CH, 100.0) == pytest.approx(
        math.log2(3.5), rel=1e-12)


def test_gu_rate_ic_values():
    site = make_site(g=1e-7, sigma2=1e-8)
    assert gu_rate_ic(0.0, site) == 0.0
    assert gu_rate_ic(0.3, site) == pytest.approx(2.0, rel=1e-12)
    site31 = make_site(g=3.1e-7, sigma2=1e-8)
    assert gu_rate_ic(1.0, site31) == pytest.approx(5.0, abs=1e-12)


def test_gu_rate_tin_values():
    site = make_site(pos=(0.0, 0.0), g=1e-7, sigma2=1e-8)
    u = (0.0, 0.0)
    # p = 0 removes the interference term entirely
    assert gu_rate_tin(0.0, u, 0.7, site, CH, 100.0) == pytest.approx(
        gu_rate_ic(0.7, site), rel=1e-12)
    # SINR = 1e-7 / (1e-8 + 1e-7 * 0.233333...) = 3 exactly
    p = 7.0 / 30.0
    assert gu_rate_tin(p, u, 1.0, site, CH, 100.0) == pytest.approx(
        2.0, rel=1e-9)
    # rate -> 0 monotonically as p grows
    rates = [gu_rate_tin(p, u, 1.0, site, CH, 100.0)
             for p in (0.0, 1.0, 10.0, 1e4, 1e8)]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    assert rates[-1] < 1e-6


def test_log2_1p_small_argument_accuracy():
    x = 1e-14
    assert log2_1p(x) == pytest.approx(x / math.log(2), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(0.0, 10.0), q=st.floats(0.0, 10.0),
       x=st.floats(-2000.0, 2000.0), y=st.floats(-2000.0, 2000.0))
def test_tin_never_beats_ic(p, q, x, y):
    site = make_site(pos=(0.0, 0.0))
    tin = gu_rate_tin(p, (x, y), q, site, CH, 100.0)
    ic = gu_rate_ic(q, site)
    assert tin <= ic + 1e-12
    if p > 1e-6 and q > 1e-6:
        assert tin < ic


@settings(max_examples=100, deadline=None)
@given(p=st.floats(1e-6, 10.0), q=st.floats(0.0, 10.0),
       dp=st.floats(1e-3, 5.0), dq=st.floats(1e-3, 5.0))
def test_uav_rate_monotonicity(p, q, dp, dq):
    site = make_site(pos=(0.0, 0.0))
    u = (30.0, 40.0)
    base = uav_rate(p, u, q, site, CH, 100.0)
    assert uav_rate(p + dp, u, q, site, CH, 100.0) > base
    assert uav_rate(p, u, q + dq, site, CH, 100.0) < base
