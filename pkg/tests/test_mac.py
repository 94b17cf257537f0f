"""Contention windows, decision sets, and per-node link selection."""
import numpy as np
import pytest

from gibbsched.mac import (
    contention_degree_bound,
    decision_set_rounds,
    generate_decision_set,
    select_link,
    transmitter_contention,
)
from gibbsched.phy import build_link_system
from gibbsched.topology import compute_neighborhoods, random_topology, ring_topology


class FixedBackoffs:
    """Stands in for a Generator, dealing a preset backoff to each node."""

    def __init__(self, backoffs):
        self.backoffs = np.asarray(backoffs)

    def integers(self, low, high, size):
        assert size == (1, self.backoffs.size)
        return self.backoffs.reshape(size)


def path_adj(n):
    adj = np.zeros((n, n), bool)
    for i in range(n - 1):
        adj[i, i + 1] = adj[i + 1, i] = True
    return adj


def winners(adj, backoffs, w=32):
    return set(generate_decision_set(adj, FixedBackoffs(backoffs), w).tolist())


def test_earlier_announcement_suppresses_neighbors():
    # Middle node goes first on a 3-path; the ends hear it and stay quiet.
    assert winners(path_adj(3), [1, 0, 1]) == {1}


def test_non_neighbors_share_a_slot_without_colliding():
    assert winners(path_adj(3), [0, 1, 0]) == {0, 2}


def test_neighbor_collision_drops_both_and_still_suppresses():
    # Ends of the path both announce at 0 and collide; the middle node hears
    # the collision and must not announce either.
    adj = path_adj(3)
    adj[0, 2] = adj[2, 0] = True  # make ends neighbors, triangle minus nothing
    assert winners(adj, [0, 0, 2]) == set()


def test_suppressed_nodes_do_not_suppress_others():
    # On a 4-path with backoffs 0,1,1,2: node 0 silences node 1, so node 1
    # never announces and node 2 wins its slot; node 3 is then silenced.
    assert winners(path_adj(4), [0, 1, 1, 2]) == {0, 2}


def test_four_flow_window_walkthrough(four_flow):
    # Transmitters a, c, e, g. Every pair contends except c and g, which sit
    # more than two hops apart. With backoffs (a, c, e, g) = (2, 0, 3, 1)
    # over five slots, c announces first and silences a and e; g cannot hear
    # c and wins slot 1 uncontested, so the decision set is {c, g}.
    tx_nodes, adj = transmitter_contention(four_flow, compute_neighborhoods(four_flow))
    assert tx_nodes.tolist() == [0, 2, 4, 6]  # a, c, e, g
    contending = {(i, j) for i in range(4) for j in range(i + 1, 4) if adj[i, j]}
    assert contending == {(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)}
    assert winners(adj, [2, 0, 3, 1], w=5) == {1, 3}


def test_decision_sets_are_independent_in_contention_graph():
    for seed in (0, 4, 7):
        topo = random_topology(20, area_side=400.0, seed=seed)
        _, adj = transmitter_contention(topo, compute_neighborhoods(topo))
        sel = decision_set_rounds(adj, np.random.default_rng(seed + 50), rounds=2000)
        clashes = sel & (sel @ adj)
        assert not clashes.any()
        assert sel.any()  # windows do produce winners


def test_ring_selection_probability_matches_analytic_value():
    # All nine ring transmitters contend mutually, so a node wins exactly
    # when it holds the strict minimum backoff among nine uniform draws
    # over 32 slots: sum_s (1/32) * ((31-s)/32)^8.
    ring = ring_topology(9)
    tx_nodes, adj = transmitter_contention(ring, compute_neighborhoods(ring))
    assert tx_nodes.tolist() == list(range(9))
    off_diag = ~np.eye(9, dtype=bool)
    assert adj[off_diag].all() and not adj.diagonal().any()
    exact = sum((1 / 32) * ((31 - s) / 32) ** 8 for s in range(32))
    assert exact == pytest.approx(0.09613670793669371)
    sel = decision_set_rounds(adj, np.random.default_rng(1), rounds=200_000)
    freq = sel.mean(axis=0)
    np.testing.assert_allclose(freq, exact, atol=0.003)
    # Never two winners when everyone contends with everyone.
    assert sel.sum(axis=1).max() <= 1


def test_selection_frequency_beats_degree_bound():
    for seed in (2, 6):
        topo = random_topology(15, area_side=400.0, seed=seed)
        nbr = compute_neighborhoods(topo)
        _, adj = transmitter_contention(topo, nbr)
        d_g = contention_degree_bound(topo, nbr)
        sel = decision_set_rounds(adj, np.random.default_rng(seed), rounds=50_000)
        assert np.all(sel.mean(axis=0) >= 0.18 / (d_g + 1))


def test_degree_bound_values(four_flow):
    ring = ring_topology(9)
    assert contention_degree_bound(ring, compute_neighborhoods(ring)) == 8
    # Each four-flow transmitter reaches the other three within two hops.
    assert contention_degree_bound(four_flow, compute_neighborhoods(four_flow)) == 3


def test_window_needs_a_slot():
    with pytest.raises(ValueError):
        decision_set_rounds(np.zeros((2, 2), bool), np.random.default_rng(0), w=0)


# --- link selection -----------------------------------------------------------

def test_idle_node_picks_uniformly_among_its_links():
    topo = random_topology(1, area_side=100.0, seed=0)
    # Graft a second link onto the same transmitter.
    from gibbsched.topology import Link
    topo.node_ids.append("r1b")
    topo.links.append(Link(0, 2, "L0b"))
    topo.gains = np.pad(topo.gains, ((0, 1), (0, 1)))
    topo.gains[0, 2] = topo.gains[2, 0] = 20.0 ** -3.5
    topo.noise = np.append(topo.noise, topo.noise[0])
    topo.pmax = np.append(topo.pmax, topo.pmax[0])
    rng = np.random.default_rng(9)
    powers = np.zeros(2)
    picks = [select_link(0, topo, powers, rng) for _ in range(4000)]
    assert None not in picks
    frac = np.mean([p == 0 for p in picks])
    assert frac == pytest.approx(0.5, abs=0.03)
    # With link 0 live, the node either revisits it (half the time, d=2) or
    # leaves well alone — it never jumps straight to the other link.
    powers = np.array([5.0, 0.0])
    picks = [select_link(0, topo, powers, rng) for _ in range(4000)]
    assert set(picks) <= {0, None}
    assert np.mean([p == 0 for p in picks]) == pytest.approx(0.5, abs=0.03)


def test_single_link_node_always_updates_it():
    topo = ring_topology(9)
    rng = np.random.default_rng(0)
    assert all(select_link(3, topo, np.zeros(9), rng) == 3 for _ in range(20))
    powers = np.zeros(9)
    powers[3] = 50.0
    assert all(select_link(3, topo, powers, rng) == 3 for _ in range(20))


def test_two_active_links_on_one_node_is_an_error():
    topo = random_topology(1, area_side=100.0, seed=0)
    from gibbsched.topology import Link
    topo.node_ids.append("r1b")
    topo.links.append(Link(0, 2, "L0b"))
    topo.gains = np.pad(topo.gains, ((0, 1), (0, 1)))
    topo.gains[0, 2] = topo.gains[2, 0] = 1.0
    topo.noise = np.append(topo.noise, topo.noise[0])
    topo.pmax = np.append(topo.pmax, topo.pmax[0])
    with pytest.raises(AssertionError):
        select_link(0, topo, np.array([1.0, 2.0]), np.random.default_rng(0))
