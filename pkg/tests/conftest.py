"""Shared fixtures: the small hand-built networks the unit tests reason about."""
import numpy as np
import pytest

from gibbsched.topology import (
    Topology,
    explicit_topology,
    pair_modulation_table,
    ring_topology,
)

# Four flows (ab, cd, ef, gh) on eight nodes with hand-set gains: every link has
# unit gain to its own receiver, c leaks 0.25 onto receivers b and f, e leaks
# 0.25 onto d, and a leaks 0.25 onto d. All other paths are unusable.
FOUR_FLOW_GAINS = {
    ("a", "b"): 1.0,
    ("c", "d"): 1.0,
    ("e", "f"): 1.0,
    ("g", "h"): 1.0,
    ("c", "b"): 0.25,
    ("c", "f"): 0.25,
    ("e", "d"): 0.25,
    ("a", "d"): 0.25,
}

FOUR_FLOW_ONE_HOP = [
    ("a", "b"), ("a", "c"), ("a", "d"), ("a", "h"),
    ("b", "c"),
    ("c", "d"), ("c", "f"),
    ("d", "e"),
    ("e", "f"), ("e", "g"),
    ("g", "h"),
]


def four_flow_network() -> Topology:
    return explicit_topology(
        node_ids=list("abcdefgh"),
        link_pairs=[("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")],
        gain_entries=FOUR_FLOW_GAINS,
        noise=1.0,
        pmax=40.0,
        one_hop_pairs=FOUR_FLOW_ONE_HOP,
    )


@pytest.fixture
def four_flow():
    return four_flow_network()


@pytest.fixture
def pair_table():
    return pair_modulation_table()


@pytest.fixture
def ring9():
    return ring_topology(9)


@pytest.fixture
def four_flow_queues():
    # Backlogs for links ab, cd, ef, gh in that order.
    return np.array([10.0, 100.0, 10.0, 0.0])
