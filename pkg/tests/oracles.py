"""Independent brute-force oracles used to validate the closed-form solvers.

These deliberately avoid the closed-form expressions under test: GU powers
are searched on a grid and the UAV power is swept over a grid, keeping only
combinations that satisfy the constraints evaluated through the channel
module. Guarantee checks carry the same 1e-9 bps/Hz slack as the scenario
feasibility test, so grid points landing exactly on a constraint boundary
are not rejected by float rounding.
"""

from __future__ import annotations

import math

import numpy as np

from uav_ic_planner.channel import a2g_gain, gu_rate_ic, log2_1p
from uav_ic_planner.ra_solver import enumerate_modes
from uav_ic_planner.scenario import LN2, Scenario


def brute_force_slot_rate(u, scenario: Scenario, step: float = 1e-3,
                          mode_constraint: str = "any") -> float:
    """Best achievable slot rate found by gridding p and the GU powers.

    For each decoding mode: IC-site GU powers take the smallest grid value
    meeting the guarantee (the rate falls with q, so no larger value can
    win); TIN-site GU powers sit at their cap (raising q only relaxes the
    TIN guarantee and does not enter the rate). The UAV power is swept over
    the full grid, keeping the feasible points.
    """
    best = -math.inf
    uav = scenario.uav
    p_grid = np.arange(0.0, uav.p_max + step / 2.0, step)
    h = np.array([a2g_gain(u, s, scenario.channel, uav.altitude)
                  for s in scenario.sites])
    for mode in enumerate_modes(scenario.n_sites, mode_constraint):
        q = np.empty(scenario.n_sites)
        ok = True
        for k in mode.ic_sites:
            site = scenario.sites[k]
            q_grid = np.arange(0.0, site.q_max + step / 2.0, step)
            meets = (np.log1p(site.g * q_grid / site.sigma2) / LN2
                     >= site.gamma - 1e-9)
            if not meets.any():
                ok = False
                break
            q[k] = q_grid[int(np.argmax(meets))]
        if not ok:
            continue
        feasible = np.ones(p_grid.size, dtype=bool)
        for k in mode.tin_sites:
            site = scenario.sites[k]
            q[k] = site.q_max
            if site.gamma == 0.0:
                continue
            tin = log2_1p(site.g * site.q_max
                          / (site.sigma2 + h[k] * p_grid))
            feasible &= tin >= site.gamma - 1e-9
        if not feasible.any():
            continue
        r = np.full(p_grid.size, math.inf)
        for k in mode.ic_sites:
            site = scenario.sites[k]
            r = np.minimum(
                r, log2_1p(h[k] * p_grid / (site.sigma2 + site.g * q[k])))
        best = max(best, float(r[feasible].max()))
    return max(best, 0.0)


def grid_resolution_bound(u, scenario: Scenario, step: float = 1e-3) -> float:
    """Upper bound on how far the grid oracle can fall below the true slot
    optimum, from the rate's sensitivity to p and to each IC-site q at the
    per-mode closed-form solution."""
    from uav_ic_planner.ra_solver import solve_mode

    uav = scenario.uav
    worst = 0.0
    for mode in enumerate_modes(scenario.n_sites):
        alloc = solve_mode(mode, u, scenario)
        err = 0.0
        for k in mode.ic_sites:
            site = scenario.sites[k]
            h = a2g_gain(u, site, scenario.channel, uav.altitude)
            c = site.sigma2 + site.g * alloc.q[k]
            # d/dq of log2(1 + h p / (sigma2 + g q))
            slope_q = (h * alloc.p * site.g) / (LN2 * c * (c + h * alloc.p))
            # d/dp of the same rate
            slope_p = h / (LN2 * (c + h * alloc.p))
            err = max(err, (slope_q + slope_p) * step)
        worst = max(worst, err)
    return worst


def fd_derivative_in_sqdist(fn, s: float, rel_step: float = 1e-6) -> float:
    """Central finite difference of fn(s) with an s-proportional step."""
    ds = max(abs(s), 1.0) * rel_step
    return (fn(s + ds) - fn(s - ds)) / (2.0 * ds)
