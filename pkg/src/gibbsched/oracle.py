"""Exhaustive reference optimizer for small networks.

The sampler's stationary distribution concentrates on the maximizers of
U(p) = sum_l rate_l(p) * q_l - epsilon * sum_l p_l over the box [0, pmax]^n,
with rates read from the padded-interference (virtual) model. Because the
rates are a step function of power, U is piecewise linear in p: within the
region realizing one fixed scheme assignment it decreases in every
coordinate, so the region's best point is its minimal-power corner — the
solution of the linear system that meets every assumed SINR threshold with
equality. Enumerating all scheme assignments and scoring each corner. This
is exact, and exponential in the number of links, hence the small-n guard.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .phy import LinkSystem, rate_for_sinr, scheme_for_sinr

MAX_ORACLE_LINKS = 6
FEASIBILITY_NUDGE = 1e-9


@dataclass
class OracleResult:
    """Best configuration found, with enough context to audit it."""

    powers: np.ndarray
    objective: float
    rates: np.ndarray
    schemes: np.ndarray        # realized scheme index per link, -1 when silent
    assignments_tried: int

    def __str__(self):
        p = ", ".join(f"{x:.6g}" for x in self.powers)
        return (f"objective {self.objective:.6f} at powers ({p}) "
                f"after {self.assignments_tried} assignments")


def objective_value(system: LinkSystem, powers: np.ndarray,
                    queues: np.ndarray, epsilon: float) -> float:
    """Backlog-weighted virtual throughput minus the power charge."""
    powers = np.asarray(powers, float)
    rates = system.virtual_rates(powers)
    return float(rates @ np.asarray(queues, float) - epsilon * powers.sum())


def objective_batch(system: LinkSystem, power_rows: np.ndarray,
                    queues: np.ndarray, epsilon: float) -> np.ndarray:
    """``objective_value`` for many power vectors at once; rows are configs."""
    P = np.atleast_2d(np.asarray(power_rows, float))
    margins = system.nhat + P @ system.m_virt.T
    rates = rate_for_sinr(P * system.g_own / margins, system.table)
    return rates @ np.asarray(queues, float) - epsilon * P.sum(axis=1)


def brute_force_optimum(system: LinkSystem, queues: np.ndarray,
                        epsilon: float) -> OracleResult:
    """Globally maximize U over the power box by scheme-assignment enumeration.

    Each assignment gives every link either silence or one modulation scheme;
    its minimal-power corner solves (I - B) p = c with
    B[l, j] = gamma_l * m_virt[l, j] / g_l and c_l = gamma_l * nhat_l / g_l.
    Corners outside the box or violating a per-node power budget are
    infeasible (the corner is the componentwise minimum of the region, so if
    it does not fit, nothing in the region does). Every corner is scored by
    re-reading the rates it actually realizes, never the assumed ones.
    """
    n = system.n_links
    if n > MAX_ORACLE_LINKS:
        space = (len(system.table.rates) + 1) ** n
        raise ValueError(
            f"exhaustive search over {space} scheme assignments is too large "
            f"for {n} links; the oracle handles at most {MAX_ORACLE_LINKS}. "
            f"For larger networks compare against long sampler runs instead.")
    if epsilon <= 0:
        raise ValueError("power price epsilon must be positive")
    queues = np.asarray(queues, float)
    if queues.shape != (n,):
        raise ValueError("need one backlog per link")

    min_sinr = system.table.min_sinr
    g = system.g_own
    node_of = system.topology.link_tx()
    node_budget = system.topology.pmax

    best_value = 0.0                       # all-silent baseline
    best_powers = np.zeros(n)
    tried = 0
    for assign in itertools.product(range(-1, len(min_sinr)), repeat=n):
        tried += 1
        active = [i for i, s in enumerate(assign) if s >= 0]
        if not active:
            continue
        gamma = min_sinr[[assign[i] for i in active]]
        B = gamma[:, None] * system.m_virt[np.ix_(active, active)] / g[active, None]
        c = gamma * system.nhat[active] / g[active]
        try:
            p_act = np.linalg.solve(np.eye(len(active)) - B, c)
        except np.linalg.LinAlgError:
            continue
        p_act = p_act * (1.0 + FEASIBILITY_NUDGE)
        if not np.all(np.isfinite(p_act)) or np.any(p_act <= 0):
            continue
        if np.any(p_act > system.link_pmax[active]):
            continue
        powers = np.zeros(n)
        powers[active] = p_act
        spent = np.bincount(node_of, weights=powers,
                            minlength=system.topology.n_nodes)
        if np.any(spent > node_budget):
            continue
        value = objective_value(system, powers, queues, epsilon)
        if value > best_value:
            best_value = value
            best_powers = powers
    rates = system.virtual_rates(best_powers)
    schemes = scheme_for_sinr(system.virtual_sinr(best_powers), system.table)
    schemes[best_powers == 0.0] = -1
    return OracleResult(powers=best_powers, objective=best_value, rates=rates,
                        schemes=schemes, assignments_tried=tried)


def grid_maximum(system: LinkSystem, queues: np.ndarray, epsilon: float,
                 points_per_axis: int = 101) -> float:
    """Best objective on a regular power mesh — a cross-check, not an oracle.

    The mesh always includes 0 and pmax on every axis. Cost grows as
    points^n, so this is only for very small networks.
    """
    n = system.n_links
    if points_per_axis ** n > 20_000_000:
        raise ValueError("grid too large; lower points_per_axis or link count")
    axes = [np.linspace(0.0, system.link_pmax[i], points_per_axis)
            for i in range(n)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    return float(objective_batch(system, mesh, queues, epsilon).max())
