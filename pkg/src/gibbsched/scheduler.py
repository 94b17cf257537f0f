"""Scheduling policies: annealed Gibbs power control, CSMA, and queue-CSMA.

Every policy exposes ``step(queues, rng) -> service_rates``: called once per
data slot with the current backlogs, it returns the packets/slot each link can
drain this slot. Policies keep their own state (powers, activity) across
calls; the queue dynamics live in the simulation driver.
"""
from __future__ import annotations

import numpy as np

from .gibbs import build_profile, k0_value, sample_power, temperature
from .mac import (
    DEFAULT_CONTROL_SLOTS,
    decision_set_rounds,
    generate_decision_set,
    select_link,
    transmitter_contention,
)
from .phy import LinkSystem
from .topology import pairwise_distances

DEFAULT_PERIOD = 50


class GibbsPolicy:
    """Distributed power/modulation control by annealed Gibbs sampling.

    Time is split into periods of ``period`` slots. Throughout a period the
    links transmit at the powers committed at the end of the previous period
    (nothing is served in the very first one), while in the background the
    network anneals a fresh power configuration against the backlogs
    snapshotted at the period start: each slot a contention window picks a
    non-interfering set of transmitters, and each winner re-samples one
    link's power from its local Gibbs density at the current temperature.
    The temperature falls on a log schedule and resets every period.
    """

    name = "gibbs"

    def __init__(self, system: LinkSystem, epsilon: float,
                 period: int = DEFAULT_PERIOD, k0="auto",
                 control_slots: int = DEFAULT_CONTROL_SLOTS,
                 anneal_horizon: int | None = None):
        if epsilon <= 0:
            raise ValueError("power price epsilon must be positive")
        if period < 1:
            raise ValueError("period must be at least one slot")
        self.system = system
        self.epsilon = epsilon
        self.period = period
        self.k0_policy = k0
        self.control_slots = control_slots
        self.anneal_horizon = period if anneal_horizon is None else anneal_horizon
        self.tx_nodes, self.contention = transmitter_contention(
            system.topology, system.neighborhoods)
        n = system.n_links
        self.virtual_powers = np.zeros(n)
        self.committed_powers = np.zeros(n)
        self.committed_rates = np.zeros(n)
        self.slot = 0
        self._snapshot = np.zeros(n)
        self._k0 = 1.0
        self.commit_count = 0

    def step(self, queues: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        t = self.slot % self.period
        if t == 0:
            self._snapshot = np.asarray(queues, float).copy()
            self._k0 = k0_value(self.k0_policy, self._snapshot,
                                self.system.table.max_rate, self.system.link_pmax,
                                self.epsilon, self.system.n_links)
        rates_now = self.committed_rates  # commits take effect next slot
        self.anneal_one_slot(t, rng)
        if t == self.period - 1:
            self._commit()
        self.slot += 1
        return rates_now

    def anneal_one_slot(self, t: int, rng: np.random.Generator) -> list[int]:
        """One background slot: contention, link selection, power re-sampling.

        Returns the links whose virtual power was re-sampled (no other link
        may change). Exposed so invariants can be checked from outside.
        """
        kappa = temperature(self._k0, t, self.anneal_horizon)
        decision = generate_decision_set(self.contention, rng, self.control_slots)
        updated = []
        for idx in decision:
            node = int(self.tx_nodes[idx])
            link = select_link(node, self.system.topology, self.virtual_powers, rng)
            if link is None:
                continue
            profile = build_profile(self.system, self.virtual_powers, link,
                                    self._snapshot)
            self.virtual_powers[link] = sample_power(profile, self.epsilon, kappa, rng)
            updated.append(link)
        return updated

    def _commit(self) -> None:
        p = self.virtual_powers
        rates = self.system.virtual_rates(p)
        actual = self.system.actual_rates(p)
        # The padded interference model must never promise more than the
        # channel delivers; a violation means the model itself is broken.
        assert np.all(actual >= rates), (
            "virtual rate exceeds deliverable rate: "
            f"virtual={rates}, actual={actual}")
        budget_used = np.bincount(self.system.topology.link_tx(), weights=p,
                                  minlength=self.system.topology.n_nodes)
        assert np.all(budget_used <= self.system.topology.pmax * (1 + 1e-12)), \
            "per-node power budget exceeded"
        self.committed_powers = p.copy()
        self.committed_rates = rates
        self.commit_count += 1


def conflict_graph(topology) -> np.ndarray:
    """Carrier-sense conflicts between links: either transmitter is within
    sense range of the other's receiver (boundary inclusive)."""
    if topology.positions is None:
        raise ValueError("carrier-sense policies need node positions")
    if topology.carrier_sense_range is None:
        raise ValueError("topology has no carrier-sense range configured")
    d = pairwise_distances(topology.positions, topology.geometry, topology.extent)
    tx = topology.link_tx()
    rx = topology.link_rx()
    sense = topology.carrier_sense_range
    hears = d[np.ix_(tx, rx)] <= sense  # hears[i, j]: tx_i within sense of rx_j
    adj = hears.T | hears
    np.fill_diagonal(adj, False)
    return adj


class CsmaPolicy:
    """Carrier-sense baseline: maximal non-conflicting sets at full power.

    Each slot the backlogged links are scanned in random order; a link joins
    the schedule when no conflicting link already has. Scheduled links
    transmit at full power and serve whatever rate the realized SINR allows.
    """

    name = "csma"

    def __init__(self, system: LinkSystem):
        self.system = system
        self.conflicts = conflict_graph(system.topology)

    def step(self, queues: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = self.system.n_links
        backlogged = np.flatnonzero(np.asarray(queues) > 0.0)
        active = np.zeros(n, bool)
        for i in rng.permutation(backlogged):
            if not (self.conflicts[i] & active).any():
                active[i] = True
        powers = np.where(active, self.system.link_pmax, 0.0)
        return self.system.actual_rates(powers)


def activation_probability(q: float) -> float:
    """Backlog-tilted switch-on probability e^w/(1+e^w) with w = log(0.1+q)."""
    return (0.1 + q) / (1.1 + q)


class QCsmaPolicy:
    """Queue-weighted CSMA: persistent activity with backlog-tilted switching.

    Links keep an on/off state. Each slot the backlogged links run a
    contention window over the conflict graph; a decision link whose conflict
    neighbors were all silent last slot turns on with probability
    (0.1 + q)/(1.1 + q) — monotone in its backlog — and off otherwise, while
    everyone else keeps state. Empty links neither contend nor transmit.
    The active set stays conflict-free by induction.
    """

    name = "qcsma"

    def __init__(self, system: LinkSystem, control_slots: int = DEFAULT_CONTROL_SLOTS):
        self.system = system
        self.conflicts = conflict_graph(system.topology)
        self.control_slots = control_slots
        self.active = np.zeros(system.n_links, bool)

    def step(self, queues: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        q = np.asarray(queues, float)
        backlogged = np.flatnonzero(q > 0.0)
        self.active &= q > 0.0  # drained links stop occupying the channel
        if backlogged.size:
            sub = self.conflicts[np.ix_(backlogged, backlogged)]
            decided = decision_set_rounds(sub, rng, self.control_slots)[0]
            neighbor_was_active = self.conflicts @ self.active
            for i in backlogged[decided]:
                if neighbor_was_active[i]:
                    self.active[i] = False
                else:
                    self.active[i] = rng.random() < activation_probability(q[i])
        clashes = self.active & (self.conflicts @ self.active)
        assert not clashes.any(), "q-csma activated conflicting links"
        powers = np.where(self.active, self.system.link_pmax, 0.0)
        return self.system.actual_rates(powers)


POLICIES = {"gibbs": GibbsPolicy, "csma": CsmaPolicy, "qcsma": QCsmaPolicy}


def make_policy(name: str, system: LinkSystem, **kwargs):
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}")
    if name != "gibbs":
        kwargs.pop("epsilon", None)
        kwargs.pop("period", None)
        kwargs.pop("k0", None)
        kwargs.pop("anneal_horizon", None)
        if name == "csma":
            kwargs.pop("control_slots", None)
    return cls(system, **kwargs)
