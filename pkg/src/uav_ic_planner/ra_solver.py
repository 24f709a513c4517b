"""Per-slot resource allocation: decoding modes, powers, and UAV rate.

For a fixed UAV position the problem has a closed-form optimum per decoding
mode; the global slot optimum is found by enumerating all mode bit-vectors
with at least one IC bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .channel import a2g_gain, a2g_gain_points, log2_1p, uav_rate
from .scenario import Scenario

# Modes whose rates differ by less than this are considered tied.
TIE_TOL = 1e-12
# Relative slack when checking the closed-form GU power against its cap.
Q_CAP_REL_TOL = 1e-9
# Enumeration guard: 2^K modes is only acceptable at desk scale.
MAX_ENUM_SITES = 16

ModeConstraint = Literal["any", "egoistic", "altruistic"]


class RaError(Exception):
    pass


class InfeasibleSite(RaError):
    """A GU rate guarantee cannot be met even at maximum power."""

    def __init__(self, site_index: int, q_needed: float, q_max: float):
        self.site_index = site_index
        self.q_needed = q_needed
        self.q_max = q_max
        super().__init__(
            f"site {site_index}: IC mode needs GU power {q_needed:.6g} W "
            f"> limit {q_max:.6g} W")


class SlotInfeasible(RaError):
    def __init__(self, slot: int, cause: RaError):
        self.slot = slot
        self.cause = cause
        super().__init__(f"slot {slot}: {cause}")


class InternalConsistencyError(RaError):
    """A quantity that global feasibility guarantees non-negative came out
    negative; indicates a scenario or solver bug rather than infeasibility."""


@dataclass(frozen=True)
class DecodingMode:
    tau: tuple[int, ...]  # 1 = decode the UAV (IC), 0 = treat as noise (TIN)

    def __post_init__(self):
        if any(t not in (0, 1) for t in self.tau):
            raise ValueError(f"mode bits must be 0/1, got {self.tau}")
        if sum(self.tau) < 1:
            raise ValueError("at least one site must decode the UAV")

    @property
    def ic_sites(self) -> tuple[int, ...]:
        return tuple(k for k, t in enumerate(self.tau) if t == 1)

    @property
    def tin_sites(self) -> tuple[int, ...]:
        return tuple(k for k, t in enumerate(self.tau) if t == 0)


@dataclass(frozen=True)
class SlotAllocation:
    mode: DecodingMode
    q: tuple[float, ...]  # GU transmit powers, W
    p: float              # UAV transmit power, W
    r: float              # UAV rate, bps/Hz


def gu_power_ic(site, site_index: int = -1) -> float:
    """Minimum GU power meeting the rate guarantee under IC."""
    q = (2.0 ** site.gamma - 1.0) * site.sigma2 / site.g
    if q > site.q_max * (1.0 + Q_CAP_REL_TOL):
        raise InfeasibleSite(site_index, q, site.q_max)
    return min(q, site.q_max)


def uav_power_cap(mode: DecodingMode, u, scenario: Scenario) -> float:
    """Largest UAV power keeping every TIN-mode GU (at q = Q_k) above its
    rate guarantee, capped at the UAV's power limit."""
    cap = math.inf
    for k in mode.tin_sites:
        site = scenario.sites[k]
        if site.gamma == 0.0:
            continue  # no guarantee, no cap
        h = a2g_gain(u, site, scenario.channel, scenario.uav.altitude)
        bracket = (site.g * site.q_max / (2.0 ** site.gamma - 1.0)
                   - site.sigma2) / h
        if bracket < -1e-12 * scenario.uav.p_max:
            raise InternalConsistencyError(
                f"site {k}: negative UAV power cap {bracket:.6g} W despite a "
                f"feasible scenario")
        cap = min(cap, max(bracket, 0.0))
    return min(scenario.uav.p_max, cap)


def solve_mode(mode: DecodingMode, u, scenario: Scenario) -> SlotAllocation:
    """Closed-form optimum for one decoding mode at one UAV position."""
    q = [0.0] * scenario.n_sites
    for k in mode.ic_sites:
        q[k] = gu_power_ic(scenario.sites[k], k)
    for k in mode.tin_sites:
        q[k] = scenario.sites[k].q_max
    p = uav_power_cap(mode, u, scenario)
    r = min(
        uav_rate(p, u, q[k], scenario.sites[k], scenario.channel,
                 scenario.uav.altitude)
        for k in mode.ic_sites
    )
    return SlotAllocation(mode=mode, q=tuple(q), p=p, r=r)


def enumerate_modes(n_sites: int,
                    constraint: ModeConstraint = "any") -> Iterable[DecodingMode]:
    if constraint == "altruistic":
        yield DecodingMode((1,) * n_sites)
        return
    if constraint == "egoistic":
        for k in range(n_sites):
            tau = [0] * n_sites
            tau[k] = 1
            yield DecodingMode(tuple(tau))
        return
    for tau in itertools.product((0, 1), repeat=n_sites):
        if any(tau):
            yield DecodingMode(tau)


def solve_slot(u, scenario: Scenario,
               mode_constraint: ModeConstraint = "any") -> SlotAllocation:
    """Globally optimal allocation at one UAV position, by mode enumeration.

    Ties within TIE_TOL prefer fewer IC bits, then the lexicographically
    smallest bit vector, for cross-platform determinism.
    """
    if scenario.n_sites > MAX_ENUM_SITES:
        raise RaError(
            f"mode enumeration is O(2^K); refusing K={scenario.n_sites} > "
            f"{MAX_ENUM_SITES}")
    best: SlotAllocation | None = None
    for mode in enumerate_modes(scenario.n_sites, mode_constraint):
        alloc = solve_mode(mode, u, scenario)
        if best is None or alloc.r > best.r + TIE_TOL:
            best = alloc
        elif abs(alloc.r - best.r) <= TIE_TOL:
            key = (sum(alloc.mode.tau), alloc.mode.tau)
            best_key = (sum(best.mode.tau), best.mode.tau)
            if key < best_key:
                best = alloc
    return best


def solve_resource_allocation(
    trajectory, scenario: Scenario,
    mode_constraint: ModeConstraint = "any",
) -> tuple[list[SlotAllocation], float]:
    """Per-slot optimal allocation along a trajectory; returns the slot
    allocations and the mission-average throughput in bps/Hz.

    Slot n is evaluated at waypoint u[n], n = 1..N.
    """
    waypoints = np.asarray(trajectory.waypoints, dtype=float)
    n_slots = waypoints.shape[0] - 1
    allocs: list[SlotAllocation] = []
    for n in range(1, n_slots + 1):
        try:
            allocs.append(solve_slot(waypoints[n], scenario, mode_constraint))
        except RaError as exc:
            raise SlotInfeasible(n, exc) from exc
    avg = math.fsum(a.r for a in allocs) / n_slots
    return allocs, avg


def slot_rates_on_points(points: np.ndarray, scenario: Scenario,
                         mode_constraint: ModeConstraint = "any") -> np.ndarray:
    """Vectorized best slot rate over many candidate UAV positions.

    points: (M, 2). Returns (M,) rates; used by the exhaustive hover search.
    """
    if scenario.n_sites > MAX_ENUM_SITES:
        raise RaError(
            f"mode enumeration is O(2^K); refusing K={scenario.n_sites} > "
            f"{MAX_ENUM_SITES}")
    points = np.asarray(points, dtype=float)
    h = a2g_gain_points(points, scenario.site_pos, scenario.channel,
                        scenario.uav.altitude)  # (M, K)
    p_max = scenario.uav.p_max
    best = np.full(points.shape[0], -np.inf)
    for mode in enumerate_modes(scenario.n_sites, mode_constraint):
        p = np.full(points.shape[0], p_max)
        for k in mode.tin_sites:
            site = scenario.sites[k]
            if site.gamma == 0.0:
                continue
            bracket = (site.g * site.q_max / (2.0 ** site.gamma - 1.0)
                       - site.sigma2) / h[:, k]
            if np.any(bracket < -1e-12 * p_max):
                raise InternalConsistencyError(
                    f"site {k}: negative UAV power cap on grid")
            p = np.minimum(p, np.maximum(bracket, 0.0))
        r = np.full(points.shape[0], np.inf)
        for k in mode.ic_sites:
            site = scenario.sites[k]
            q_ic = gu_power_ic(site, k)
            r = np.minimum(
                r, log2_1p(h[:, k] * p / (site.sigma2 + q_ic * site.g)))
        best = np.maximum(best, r)
    return best
