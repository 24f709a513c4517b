"""Shared fixtures and random-instance generators for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from uav_ic_planner.scenario import (ChannelParams, GbsSite, Scenario,
                                     UavParams, check_feasibility,
                                     default_scenario, place_sites_uniform)


def make_site(pos=(0.0, 0.0), g=1e-7, sigma2=1e-8, q_max=1.0,
              gamma=2.0) -> GbsSite:
    return GbsSite(pos=pos, g=g, sigma2=sigma2, q_max=q_max, gamma=gamma)


def make_channel(beta0=1e-3, alpha=2.0, theta0=1e-4, epsilon=3.0) -> ChannelParams:
    return ChannelParams(beta0=beta0, alpha=alpha, theta0=theta0,
                         epsilon=epsilon)


def make_uav(altitude=100.0, v_max=50.0, p_max=1.0, u_init=(0.0, 0.0),
             u_final=(1000.0, 1000.0), mission_t=150.0, n_slots=200,
             t_max=1800.0) -> UavParams:
    return UavParams(altitude=altitude, v_max=v_max, p_max=p_max,
                     u_init=u_init, u_final=u_final, mission_t=mission_t,
                     n_slots=n_slots, t_max=t_max)


def single_site_scenario(u_init=(0.0, 0.0), u_final=(0.0, 0.0),
                         mission_t=10.0, n_slots=2, gamma=2.0,
                         site_pos=(0.0, 0.0)) -> Scenario:
    return Scenario(
        channel=make_channel(),
        sites=(make_site(pos=site_pos, gamma=gamma),),
        uav=make_uav(u_init=u_init, u_final=u_final, mission_t=mission_t,
                     n_slots=n_slots),
    )


def random_feasible_scenario(rng: np.random.Generator, k: int | None = None,
                             n_slots: int = 30) -> Scenario:
    """A randomized scenario guaranteed feasible: gammas are drawn strictly
    below each site's maximum supportable guarantee and the mission duration
    strictly above the straight-line flight time."""
    k = k if k is not None else int(rng.integers(1, 4))
    area = 800.0
    channel = make_channel()
    sites = []
    for pos in place_sites_uniform(rng, k, area, area):
        theta = float(rng.uniform(6.0, 14.0))
        g = channel.theta0 * theta ** (-channel.epsilon)
        sigma2 = 1e-8
        q_max = float(rng.uniform(0.5, 1.5))
        gamma_cap = math.log2(1.0 + g * q_max / sigma2)
        gamma = float(rng.uniform(0.3, 0.8) * gamma_cap)
        sites.append(GbsSite(pos=pos, g=g, sigma2=sigma2, q_max=q_max,
                             gamma=gamma))
    u_init = (float(rng.uniform(0, area)), float(rng.uniform(0, area)))
    u_final = (float(rng.uniform(0, area)), float(rng.uniform(0, area)))
    v_max = 50.0
    min_t = math.dist(u_init, u_final) / v_max
    mission_t = float(min_t * rng.uniform(1.5, 4.0) + rng.uniform(5.0, 40.0))
    uav = make_uav(p_max=float(rng.uniform(0.5, 1.5)), u_init=u_init,
                   u_final=u_final, mission_t=mission_t, n_slots=n_slots)
    scenario = Scenario(channel=channel, sites=tuple(sites), uav=uav)
    report = check_feasibility(scenario)
    assert report.feasible, "generator bug: scenario must be feasible"
    return scenario


@pytest.fixture(scope="session")
def default_sc() -> Scenario:
    return default_scenario()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
