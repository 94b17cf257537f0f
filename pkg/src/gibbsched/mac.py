"""Control-plane MAC: who gets to update its power in a given data slot.

Before each data slot the transmitters run a short contention window of W
control mini-slots. Every transmitter draws a uniform backoff; when its slot
arrives it announces itself unless it has already heard an earlier
announcement (or an announcement collision) from a contention neighbor — a
node one or two hops away. Announcers with no same-slot announcing neighbor
form the decision set. Same-slot announcements between neighbors collide and
drop both; between non-neighbors they are independent.

The construction guarantees the decision set is an independent set of the
two-hop contention graph, and it never looks at queues or powers, so update
opportunities are handed out independently of network state.
"""
from __future__ import annotations

import numpy as np

from .topology import NeighborhoodMap, Topology

DEFAULT_CONTROL_SLOTS = 32


def transmitter_contention(topology: Topology, nbr: NeighborhoodMap):
    """Transmitter list and their pairwise contention adjacency.

    Two transmitters contend when either can hear the other's control traffic
    directly or through a common neighbor (one- or two-hop relation).
    """
    tx_nodes = topology.transmitter_nodes()
    reach = nbr.contention()
    adj = reach[np.ix_(tx_nodes, tx_nodes)].copy()
    np.fill_diagonal(adj, False)
    return tx_nodes, adj


def decision_set_rounds(adj: np.ndarray, rng: np.random.Generator,
                        w: int = DEFAULT_CONTROL_SLOTS, rounds: int = 1) -> np.ndarray:
    """Simulate ``rounds`` independent contention windows; bool (rounds, n).

    Suppression is causal: only nodes that actually announce silence their
    neighbors, so a suppressed node never suppresses anyone else.
    """
    n = adj.shape[0]
    if w < 1:
        raise ValueError("need at least one control slot")
    backoff = rng.integers(0, w, size=(rounds, n))
    suppressed = np.zeros((rounds, n), bool)
    selected = np.zeros((rounds, n), bool)
    # Only slots someone actually drew can change anything.
    occupied = np.unique(backoff) if rounds == 1 else range(w)
    for s in occupied:
        announcing = (backoff == s) & ~suppressed
        if not announcing.any():
            continue
        heard = announcing @ adj  # count of announcing neighbors, per node
        selected |= announcing & (heard == 0)
        suppressed |= heard > 0
        suppressed |= announcing  # announcers are done either way
    return selected


def generate_decision_set(adj: np.ndarray, rng: np.random.Generator,
                          w: int = DEFAULT_CONTROL_SLOTS) -> np.ndarray:
    """Indices of transmitters that won a single contention window."""
    mask = decision_set_rounds(adj, rng, w, rounds=1)[0]
    members = np.flatnonzero(mask)
    # Winners must be pairwise non-contending; anything else is a MAC bug.
    assert not adj[np.ix_(members, members)].any(), "decision set is not independent"
    return members


def contention_degree_bound(topology: Topology, nbr: NeighborhoodMap) -> int:
    """Degree measure d_G controlling the update-frequency guarantee.

    The maximum, over transmitters a, of (i) a's number of outgoing links and
    (ii) the number of links transmitted by a's contention neighbors. Each
    transmitter makes the decision set with probability at least
    0.18 / (d_G + 1) in every window.
    """
    reach = nbr.contention()
    tx_counts = np.bincount(topology.link_tx(), minlength=topology.n_nodes)
    best = 0
    for a in topology.transmitter_nodes():
        own = int(tx_counts[a])
        others = int(tx_counts[reach[a]].sum()) - (tx_counts[a] if reach[a, a] else 0)
        best = max(best, own, others)
    return best


def select_link(node: int, topology: Topology, powers: np.ndarray,
                rng: np.random.Generator) -> int | None:
    """Which of the node's links updates, given it made the decision set.

    A node with a live link revisits it with probability 1/d (d = number of
    outgoing links) and otherwise stays put, so committed power levels are
    not churned every window; an idle node picks uniformly among its links.
    """
    out = topology.out_links(node)
    d = len(out)
    active = [j for j in out if powers[j] > 0.0]
    assert len(active) <= 1, "node is transmitting on several links at once"
    if active:
        return active[0] if rng.random() < 1.0 / d else None
    return out[int(rng.integers(0, d))]
