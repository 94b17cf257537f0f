"""Annealed Gibbs sampling over transmit power for one link at a time.

When a link gets an update slot it builds a *power profile*: the interval
decomposition of [0, pmax] induced by every power level at which some nearby
link's achievable scheme changes. Within an interval the local objective

    V(q) = sum of (virtual rate x backlog) over the links whose receivers the
           updating transmitter can reach, plus its own link

is constant, so the Gibbs density exp((V(q) - epsilon*q) / K) restricted to
the interval is a truncated exponential and can be sampled exactly: pick an
interval by softmax over closed-form log-masses, then invert the conditional
CDF. K is the annealing temperature, lowered on a logarithmic schedule within
each scheduling period so the network settles into high-value configurations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phy import LinkSystem, rate_for_sinr

# Critical powers closer than this (relatively) collapse into one breakpoint.
BREAKPOINT_MERGE_RTOL = 1e-12


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-constant local objective for one link's power choice.

    ``breakpoints`` has k+1 increasing entries from 0 to pmax; ``weights[i]``
    is the objective value V on (breakpoints[i], breakpoints[i+1]).
    """

    link: int
    breakpoints: np.ndarray
    weights: np.ndarray

    @property
    def pmax(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_intervals(self) -> int:
        return self.weights.size

    def weight_at(self, q) -> np.ndarray:
        """V(q), attributing breakpoints to the interval on their right."""
        q = np.asarray(q, float)
        idx = np.clip(np.searchsorted(self.breakpoints, q, side="right") - 1,
                      0, self.n_intervals - 1)
        return self.weights[idx]

    def to_csv(self) -> str:
        lines = ["interval_start,interval_end,weight"]
        for i in range(self.n_intervals):
            lines.append(f"{self.breakpoints[i]:.10g},{self.breakpoints[i + 1]:.10g},"
                         f"{self.weights[i]:.10g}")
        return "\n".join(lines) + "\n"


def _merge_close(values: np.ndarray, scale: float) -> np.ndarray:
    """Sorted unique values, collapsing near-duplicates (relative to scale)."""
    if values.size == 0:
        return values
    values = np.sort(values)
    keep = [values[0]]
    for v in values[1:]:
        if v - keep[-1] > BREAKPOINT_MERGE_RTOL * max(abs(v), abs(keep[-1]), scale):
            keep.append(v)
    return np.array(keep)


def build_profile(system: LinkSystem, powers: np.ndarray, link: int,
                  queues: np.ndarray) -> PowerProfile:
    """Profile for ``link`` given everyone else's current virtual powers.

    ``powers`` is the full per-link virtual power vector; the updating link's
    own entry is ignored (its power is the free variable). Any other link
    sharing the updating transmitter must be silent.
    """
    topo = system.topology
    table = system.table
    tx_a = topo.links[link].tx
    pmax = float(system.link_pmax[link])

    p = np.asarray(powers, float).copy()
    for j, lnk in enumerate(topo.links):
        if j != link and lnk.tx == tx_a and p[j] != 0.0:
            raise AssertionError(
                f"link {topo.link_names[j]} shares transmitter with updating "
                f"link {topo.link_names[link]} but is active")
    p[link] = 0.0

    margins = system.virtual_margin(p)  # updating link contributes nothing

    crit = [system.table.min_sinr * margins[link] / system.g_own[link]]
    for j in range(system.n_links):
        if j == link or p[j] == 0.0 or system.m_virt[j, link] == 0.0:
            continue
        # Power levels at which link j's schemes stop being feasible.
        crit.append((p[j] * system.g_own[j] / table.min_sinr - margins[j])
                    / system.m_virt[j, link])
    crit = np.concatenate(crit)
    crit = crit[(crit > 0.0) & (crit < pmax)]
    breakpoints = np.concatenate([[0.0], _merge_close(crit, pmax), [pmax]])

    # Links whose rate-weighted backlog the updater accounts for: its own,
    # plus every link whose receiver is a one-hop neighbor of its transmitter.
    rx = topo.link_rx()
    counted = system.neighborhoods.one_hop[tx_a, rx].copy()
    counted[link] = True

    # Margins are affine in the updating link's power q, so every interval
    # midpoint can be evaluated in one shot: margin_j(q) = base_j + q*c_j.
    mids = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    base = margins[counted]
    c = system.m_virt[counted, link]
    received = (p * system.g_own)[counted]
    own_pos = int(np.flatnonzero(np.flatnonzero(counted) == link)[0])
    sinr = received[None, :] / (base[None, :] + np.outer(mids, c))
    sinr[:, own_pos] = mids * system.g_own[link] / margins[link]
    rates = rate_for_sinr(sinr, table)
    weights = rates @ np.asarray(queues, float)[counted]
    return PowerProfile(link=link, breakpoints=breakpoints, weights=weights)


# ---------------------------------------------------------------------------
# sampling


def interval_log_masses(profile: PowerProfile, epsilon: float, kappa: float) -> np.ndarray:
    """Unnormalized log-mass of each interval under exp((V - eps*q)/K).

    Omits the constant K/epsilon factor common to every interval; exact up to
    that constant, computed stably for arbitrarily large V/K ratios.
    """
    if epsilon <= 0 or kappa <= 0:
        raise ValueError("epsilon and kappa must be positive")
    left = profile.breakpoints[:-1]
    width = np.diff(profile.breakpoints)
    return (profile.weights - epsilon * left) / kappa + np.log(
        -np.expm1(-epsilon * width / kappa))


def stationary_log_density(profile: PowerProfile, epsilon: float, kappa: float, q):
    """Unnormalized log-density (V(q) - epsilon*q)/K of the Gibbs measure."""
    return (profile.weight_at(q) - epsilon * np.asarray(q, float)) / kappa


def sample_power(profile: PowerProfile, epsilon: float, kappa: float,
                 rng: np.random.Generator, size: int | None = None):
    """Draw from the Gibbs density exactly: softmax interval, then inverse CDF.

    Scalar when ``size`` is None, else an array of independent draws.
    """
    log_m = interval_log_masses(profile, epsilon, kappa)
    prob = np.exp(log_m - log_m.max())
    cdf = np.cumsum(prob)
    n = 1 if size is None else int(size)
    u_iv = rng.random(n) * cdf[-1]
    idx = np.searchsorted(cdf, u_iv, side="right")
    idx = np.minimum(idx, prob.size - 1)

    left = profile.breakpoints[idx]
    width = np.diff(profile.breakpoints)[idx]
    # Conditional on the interval, q - left is a truncated exponential.
    w = -np.expm1(-epsilon * width / kappa)
    u = rng.random(n)
    q = left - (kappa / epsilon) * np.log1p(-u * w)
    q = np.minimum(q, profile.breakpoints[-1])
    return float(q[0]) if size is None else q


# ---------------------------------------------------------------------------
# annealing schedule


def temperature(k0: float, t: int, horizon: int) -> float:
    """K(t) = K0 / log(2 + min(t, horizon)); t counts slots within a period."""
    if k0 <= 0:
        raise ValueError("K0 must be positive")
    return k0 / math.log(2.0 + min(t, horizon))


def objective_span(queues: np.ndarray, max_rate: float, link_pmax: np.ndarray,
                   epsilon: float) -> float:
    """Upper bound on the global objective's range for the current backlogs."""
    return float(max_rate * np.sum(queues) + epsilon * np.sum(link_pmax))


def k0_value(policy, queues: np.ndarray, max_rate: float,
             link_pmax: np.ndarray, epsilon: float, n_links: int) -> float:
    """Resolve the K0 setting: a number, "auto", or "theorem".

    "auto" anchors the temperature to the power-price scale eps * pmax: at
    that scale the exp(-eps*p/K) tilt still distinguishes idle from full
    power, which is what lets a sampled link abandon a transmission that no
    longer earns its keep, while backlog weights dwarf K as soon as queues
    build, so late-period samples track the weight maximizer. Scaling K0
    with the backlog instead looks tempting but self-defeats: the power tilt
    flattens as queues grow and every link then clings to a doomed power
    level. "theorem" uses the 2n-times-span value under which the stationary
    distribution provably concentrates, at the cost of far slower mixing.
    """
    if policy == "auto":
        return max(epsilon * float(np.max(link_pmax)), 1e-12)
    if policy == "theorem":
        span = objective_span(queues, max_rate, link_pmax, epsilon)
        return 2.0 * n_links * max(span, 1e-12)
    k0 = float(policy)
    if k0 <= 0:
        raise ValueError("K0 must be positive")
    return k0
