"""Physical layer: SINR, achievable rates, and the per-link interference model.

Two SINR views exist side by side. The *actual* SINR of a link divides its
received power by the receiver's noise plus interference from every other
transmitting link. The *virtual* SINR used for distributed decisions replaces
out-of-neighborhood interference with its worst case — those transmitters are
charged at full power inside the padded noise floor — so it never exceeds the
actual SINR and any rate chosen against it is guaranteed deliverable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import (
    DEFAULT_NEIGHBOR_GAIN_THRESHOLD,
    ModulationTable,
    NeighborhoodMap,
    Topology,
    compute_neighborhoods,
    default_modulation_table,
)


def rate_for_sinr(gamma, table: ModulationTable):
    """Best feasible rate at each SINR (0 when even the lowest scheme fails).

    Thresholds are inclusive: a link sitting exactly at a scheme's minimum
    SINR may use it.
    """
    gamma = np.asarray(gamma, float)
    idx = np.searchsorted(table.min_sinr, gamma, side="right") - 1
    rates = np.where(idx >= 0, table.rates[np.maximum(idx, 0)], 0.0)
    return rates if rates.ndim else float(rates)


def scheme_for_sinr(gamma, table: ModulationTable):
    """Index of the best feasible scheme, or -1 when the link must stay silent."""
    gamma = np.asarray(gamma, float)
    idx = np.searchsorted(table.min_sinr, gamma, side="right") - 1
    return idx if idx.ndim else int(idx)


@dataclass
class LinkSystem:
    """Precomputed per-link arrays for fast SINR evaluation.

    ``m_full[j, i]`` is the gain from link i's transmitter to link j's
    receiver (zero on the diagonal); ``m_virt`` keeps only the entries whose
    transmitter is a one-hop neighbor of the receiver, with everything else
    folded into the padded noise floor ``nhat``.
    """

    topology: Topology
    table: ModulationTable
    neighborhoods: NeighborhoodMap
    g_own: np.ndarray = field(init=False)
    m_full: np.ndarray = field(init=False)
    m_virt: np.ndarray = field(init=False)
    noise_rx: np.ndarray = field(init=False)
    nhat: np.ndarray = field(init=False)
    link_pmax: np.ndarray = field(init=False)

    def __post_init__(self):
        topo = self.topology
        tx = topo.link_tx()
        rx = topo.link_rx()
        n = topo.n_links
        self.g_own = topo.gains[tx, rx]
        if np.any(self.g_own <= 0):
            bad = topo.link_names[int(np.argmin(self.g_own))]
            raise ValueError(f"link {bad} has no usable path to its own receiver")
        m = topo.gains[np.ix_(tx, rx)].T.copy()  # m[j, i] = g[tx_i, rx_j]
        np.fill_diagonal(m, 0.0)
        self.m_full = m
        in_nbr = self.neighborhoods.one_hop[np.ix_(tx, rx)].T  # [j, i]: tx_i ~ rx_j
        self.m_virt = np.where(in_nbr, m, 0.0)
        np.fill_diagonal(self.m_virt, 0.0)
        self.noise_rx = topo.noise[rx]
        self.nhat = self.neighborhoods.nhat
        self.link_pmax = topo.pmax[tx]

    @property
    def n_links(self) -> int:
        return self.topology.n_links

    # -- actual channel ----------------------------------------------------
    def actual_sinr(self, powers: np.ndarray) -> np.ndarray:
        p = np.asarray(powers, float)
        denom = self.noise_rx + self.m_full @ p
        return p * self.g_own / denom

    def actual_rates(self, powers: np.ndarray) -> np.ndarray:
        return rate_for_sinr(self.actual_sinr(powers), self.table)

    # -- virtual (worst-case padded) channel ---------------------------------
    def virtual_margin(self, powers: np.ndarray) -> np.ndarray:
        """Padded interference-plus-noise each receiver charges, per link."""
        return self.nhat + self.m_virt @ np.asarray(powers, float)

    def virtual_sinr(self, powers: np.ndarray) -> np.ndarray:
        p = np.asarray(powers, float)
        return p * self.g_own / self.virtual_margin(p)

    def virtual_rates(self, powers: np.ndarray) -> np.ndarray:
        return rate_for_sinr(self.virtual_sinr(powers), self.table)


def build_link_system(topology: Topology, table: ModulationTable | None = None,
                      alpha: float = DEFAULT_NEIGHBOR_GAIN_THRESHOLD) -> LinkSystem:
    if table is None:
        table = default_modulation_table()
    nbr = compute_neighborhoods(topology, alpha)
    return LinkSystem(topology, table, nbr)
