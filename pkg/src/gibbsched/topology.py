"""Network topologies: nodes, directed links, channel gains, neighborhoods.

A topology is a set of nodes in the plane (or on a torus), a set of directed
links (transmitter node -> receiver node), a channel-gain matrix between all
node pairs, per-node noise floors and power budgets, and a modulation table
mapping SINR to achievable rate.

Gains normally come from positions via a power-law path loss; hand-built
networks may instead supply an explicit gain matrix (in which case entries of
zero mean "no usable path" and positions are optional).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_PATH_LOSS_EXPONENT = 3.5
# Gain threshold under which two nodes no longer count as one-hop neighbors.
# Equals the gain of a 100 m path at the default exponent: 100**-3.5 == 1e-7.
DEFAULT_NEIGHBOR_GAIN_THRESHOLD = 1e-7


@dataclass(frozen=True)
class Link:
    tx: int
    rx: int
    name: str


@dataclass(frozen=True)
class ModulationTable:
    """Coding/modulation schemes with strictly increasing rate and SINR threshold.

    ``rates`` are in packets/slot; ``min_sinr`` are linear SINR values. A
    scheme is feasible when SINR >= its threshold (boundary included).
    """

    names: tuple[str, ...]
    rates: np.ndarray
    min_sinr: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, float)
        sinr = np.asarray(self.min_sinr, float)
        if rates.shape != sinr.shape or rates.ndim != 1 or rates.size == 0:
            raise ValueError("modulation table needs matching 1-D rate/SINR arrays")
        if len(self.names) != rates.size:
            raise ValueError("modulation table names do not match entries")
        if np.any(np.diff(rates) <= 0) or np.any(np.diff(sinr) <= 0):
            raise ValueError("modulation table must be strictly increasing in rate and SINR")
        if rates[0] <= 0 or sinr[0] <= 0:
            raise ValueError("rates and SINR thresholds must be positive")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "min_sinr", sinr)

    @property
    def max_rate(self) -> float:
        return float(self.rates[-1])

    def __len__(self) -> int:
        return self.rates.size


def default_modulation_table(slot_ms: float = 1.0, packet_kbit: float = 12.0) -> ModulationTable:
    """802.11g-style table: 6..54 Mbps converted to packets/slot.

    With 1 ms slots and 12 kbit packets the top scheme carries 4.5 packets
    per slot. Thresholds (dB): 6, 8, 9, 11, 17, 19, 24, 25.
    """
    mbps = np.array([6.0, 9.0, 12.0, 18.0, 24.0, 36.0, 48.0, 54.0])
    thr_db = np.array([6.0, 8.0, 9.0, 11.0, 17.0, 19.0, 24.0, 25.0])
    rates = mbps * 1e3 * (slot_ms / 1e3) / packet_kbit  # packets per slot
    return ModulationTable(
        names=tuple(f"{int(m)}Mbps" for m in mbps),
        rates=rates,
        min_sinr=10 ** (thr_db / 10.0),
    )


def pair_modulation_table() -> ModulationTable:
    """Two-scheme table (rate 1 @ SINR 4, rate 2 @ SINR 8) used by the docs and tests."""
    return ModulationTable(("BPSK", "QPSK"), np.array([1.0, 2.0]), np.array([4.0, 8.0]))


@dataclass
class Topology:
    node_ids: list[str]
    links: list[Link]
    gains: np.ndarray            # (V, V); gains[i, j] = channel gain node i -> node j
    noise: np.ndarray            # (V,) receiver noise floor
    pmax: np.ndarray             # (V,) per-node transmit power budget
    positions: np.ndarray | None = None   # (V, 2) meters, None for abstract networks
    geometry: str = "plane"      # "plane" | "torus"
    extent: float | None = None  # torus side length
    carrier_sense_range: float | None = None
    explicit_one_hop: np.ndarray | None = None  # (V, V) bool override for neighborhoods

    def __post_init__(self):
        v = len(self.node_ids)
        self.gains = np.asarray(self.gains, float)
        self.noise = np.asarray(self.noise, float)
        self.pmax = np.asarray(self.pmax, float)
        if self.gains.shape != (v, v):
            raise ValueError("gain matrix shape does not match node count")
        if self.noise.shape != (v,) or self.pmax.shape != (v,):
            raise ValueError("noise/pmax must have one entry per node")
        if np.any(self.noise <= 0):
            raise ValueError("noise floors must be positive")
        if np.any(self.pmax < 0):
            raise ValueError("power budgets must be nonnegative")
        if np.any(self.gains < 0):
            raise ValueError("gains must be nonnegative")
        seen = set()
        for lnk in self.links:
            if lnk.tx == lnk.rx:
                raise ValueError(f"link {lnk.name} has identical endpoints")
            if (lnk.tx, lnk.rx) in seen:
                raise ValueError(f"duplicate link {lnk.name}")
            seen.add((lnk.tx, lnk.rx))

    # -- convenience views -------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def link_names(self) -> list[str]:
        return [l.name for l in self.links]

    def link_tx(self) -> np.ndarray:
        return np.array([l.tx for l in self.links], dtype=int)

    def link_rx(self) -> np.ndarray:
        return np.array([l.rx for l in self.links], dtype=int)

    def transmitter_nodes(self) -> np.ndarray:
        """Nodes with at least one outgoing link, in index order."""
        return np.unique(self.link_tx())

    def out_links(self, node: int) -> list[int]:
        return [i for i, l in enumerate(self.links) if l.tx == node]

    def node_index(self, node_id: str) -> int:
        return self.node_ids.index(node_id)

    def link_index(self, name: str) -> int:
        return self.link_names.index(name)

    def export_nodes_csv(self) -> str:
        """Node table (id, x, y, role) as CSV text; positions blank if abstract."""
        tx_set = set(self.link_tx().tolist())
        rx_set = set(self.link_rx().tolist())
        out = ["node,x_m,y_m,role"]
        for i, nid in enumerate(self.node_ids):
            role = "tx" if i in tx_set else ("rx" if i in rx_set else "idle")
            if self.positions is None:
                out.append(f"{nid},,,{role}")
            else:
                x, y = self.positions[i]
                out.append(f"{nid},{x:.6f},{y:.6f},{role}")
        return "\n".join(out) + "\n"


def pairwise_distances(positions: np.ndarray, geometry: str = "plane",
                       extent: float | None = None) -> np.ndarray:
    pos = np.asarray(positions, float)
    delta = np.abs(pos[:, None, :] - pos[None, :, :])
    if geometry == "torus":
        if extent is None or extent <= 0:
            raise ValueError("torus geometry needs a positive extent")
        delta = np.minimum(delta, extent - delta)
    elif geometry != "plane":
        raise ValueError(f"unknown geometry {geometry!r}")
    return np.sqrt((delta ** 2).sum(axis=2))


def build_gain_matrix(positions: np.ndarray, exponent: float = DEFAULT_PATH_LOSS_EXPONENT,
                      geometry: str = "plane", extent: float | None = None) -> np.ndarray:
    """Power-law path-loss gains: gain = distance**-exponent.

    The diagonal is zeroed (a node's own transmissions are excluded from its
    interference sums elsewhere). Distinct nodes at the same position are an
    error; with exponent 0 every off-diagonal gain is 1.
    """
    dist = pairwise_distances(positions, geometry, extent)
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0.0):
        a, b = np.argwhere((dist == 0.0) & off)[0]
        raise ValueError(f"colocated nodes: {a} and {b} share a position")
    gains = np.zeros_like(dist)
    if exponent == 0.0:
        gains[off] = 1.0
    else:
        gains[off] = dist[off] ** -exponent
    return gains


@dataclass
class NeighborhoodMap:
    """One-hop/two-hop node neighborhoods plus per-link interference margins.

    ``xi`` bounds the interference a link's receiver can get from transmitters
    outside its one-hop neighborhood (every such node at full power), and
    ``nhat = noise + xi`` is the padded noise floor used by the virtual-rate
    computations.
    """

    one_hop: np.ndarray   # (V, V) bool, symmetric, empty diagonal
    two_hop: np.ndarray   # (V, V) bool
    xi: np.ndarray        # (n_links,)
    nhat: np.ndarray      # (n_links,)
    alpha: float | None = None

    def contention(self) -> np.ndarray:
        """Union of one- and two-hop relations (who hears whose control traffic)."""
        return self.one_hop | self.two_hop

    def one_hop_set(self, node: int) -> set[int]:
        return set(np.flatnonzero(self.one_hop[node]).tolist())

    def two_hop_set(self, node: int) -> set[int]:
        return set(np.flatnonzero(self.two_hop[node]).tolist())


def compute_neighborhoods(topology: Topology,
                          alpha: float = DEFAULT_NEIGHBOR_GAIN_THRESHOLD) -> NeighborhoodMap:
    """Derive neighbor sets from the gain matrix (or the explicit override).

    Nodes a != b are one-hop neighbors when max(g_ab, g_ba) >= alpha. Two-hop
    neighbors are neighbors-of-neighbors that are not already one-hop. Both
    relations are symmetric.
    """
    v = topology.n_nodes
    if topology.explicit_one_hop is not None:
        one = np.asarray(topology.explicit_one_hop, bool).copy()
        if one.shape != (v, v):
            raise ValueError("explicit one-hop matrix has wrong shape")
        if not np.array_equal(one, one.T):
            raise ValueError("one-hop relation must be symmetric")
        np.fill_diagonal(one, False)
        alpha_used = None
    else:
        g = np.maximum(topology.gains, topology.gains.T)
        one = g >= alpha
        np.fill_diagonal(one, False)
        alpha_used = alpha

    two = (one @ one) > 0
    np.fill_diagonal(two, False)
    two &= ~one

    tx_nodes = topology.transmitter_nodes()
    xi = np.zeros(topology.n_links)
    for j, lnk in enumerate(topology.links):
        b = lnk.rx
        outside = [x for x in tx_nodes if x != b and not one[x, b]]
        xi[j] = sum(topology.pmax[x] * topology.gains[x, b] for x in outside)
    nhat = topology.noise[topology.link_rx()] + xi
    return NeighborhoodMap(one_hop=one, two_hop=two, xi=xi, nhat=nhat, alpha=alpha_used)


# ---------------------------------------------------------------------------
# constructors


def ring_topology(n_links: int, link_length: float = 20.0,
                  carrier_sense_range: float = 40.0,
                  pmax: float = 100.0, noise: float | str = "auto-3db",
                  table: ModulationTable | None = None,
                  exponent: float = DEFAULT_PATH_LOSS_EXPONENT) -> Topology:
    """Ring of ``n_links`` directed links, one transmitter/receiver pair each.

    Transmitters sit evenly on a circle whose chord between adjacent
    transmitters equals ``link_length``; each receiver sits ``link_length``
    along the counter-clockwise tangent from its transmitter. At the defaults
    the carrier-sense range (40 m) slightly exceeds the two-hop node distance
    (2 chords apart, ~37.6 m), so each link's carrier-sense conflicts are the
    links one and two hops around the ring.
    """
    if n_links < 3:
        raise ValueError("ring needs at least 3 links")
    radius = link_length / (2.0 * math.sin(math.pi / n_links))
    ang = 2.0 * np.pi * np.arange(n_links) / n_links
    tx_pos = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rx_pos = tx_pos + link_length * np.stack([-np.sin(ang), np.cos(ang)], axis=1)
    positions = np.vstack([tx_pos, rx_pos])
    node_ids = [f"t{k}" for k in range(n_links)] + [f"r{k}" for k in range(n_links)]
    links = [Link(k, n_links + k, f"L{k}") for k in range(n_links)]
    gains = build_gain_matrix(positions, exponent)
    noise_val = resolve_noise(noise, pmax, link_length, exponent, table)
    v = 2 * n_links
    return Topology(node_ids, links, gains, np.full(v, noise_val), np.full(v, pmax),
                    positions=positions, geometry="plane",
                    carrier_sense_range=carrier_sense_range)


def random_topology(n_links: int, area_side: float, link_length: float = 20.0,
                    carrier_sense_range: float = 200.0,
                    pmax: float = 100.0, noise: float | str = "auto-3db",
                    table: ModulationTable | None = None,
                    exponent: float = DEFAULT_PATH_LOSS_EXPONENT,
                    rng: np.random.Generator | None = None,
                    seed: int | None = None) -> Topology:
    """Uniformly scattered links on a square torus.

    Each transmitter is placed uniformly; its receiver sits ``link_length``
    away in a uniformly random direction (wrapped). Deterministic for a given
    seed or generator.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if n_links < 1:
        raise ValueError("need at least one link")
    tx_pos = rng.uniform(0.0, area_side, size=(n_links, 2))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_links)
    rx_pos = tx_pos + link_length * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    rx_pos %= area_side
    positions = np.vstack([tx_pos, rx_pos])
    node_ids = [f"t{k}" for k in range(n_links)] + [f"r{k}" for k in range(n_links)]
    links = [Link(k, n_links + k, f"L{k}") for k in range(n_links)]
    gains = build_gain_matrix(positions, exponent, geometry="torus", extent=area_side)
    noise_val = resolve_noise(noise, pmax, link_length, exponent, table)
    v = 2 * n_links
    return Topology(node_ids, links, gains, np.full(v, noise_val), np.full(v, pmax),
                    positions=positions, geometry="torus", extent=area_side,
                    carrier_sense_range=carrier_sense_range)


def resolve_noise(noise: float | str, pmax: float, link_length: float,
                  exponent: float, table: ModulationTable | None = None) -> float:
    """Numeric noise floor, or the "auto-3db" rule.

    "auto-3db" picks the floor so a link of ``link_length`` at full power has
    a 3 dB SINR margin above the table's top threshold — the strongest scheme
    stays reachable but not by much.
    """
    if isinstance(noise, str):
        if noise != "auto-3db":
            raise ValueError(f"unknown noise rule {noise!r}")
        if table is None:
            table = default_modulation_table()
        top = float(table.min_sinr[-1])
        return pmax * link_length ** -exponent / (top * 10 ** 0.3)
    if noise <= 0:
        raise ValueError("noise floor must be positive")
    return float(noise)


def explicit_topology(node_ids: list[str], link_pairs: list[tuple[str, str]],
                      gain_entries: dict[tuple[str, str], float],
                      noise: dict[str, float] | float,
                      pmax: dict[str, float] | float,
                      one_hop_pairs: list[tuple[str, str]] | None = None) -> Topology:
    """Hand-built network from named nodes, listed gains, and optional neighbor sets.

    Unlisted gains are zero (no usable path). When ``one_hop_pairs`` is given
    the neighborhood computation uses it verbatim instead of a gain threshold.
    """
    v = len(node_ids)
    index = {nid: i for i, nid in enumerate(node_ids)}
    if len(index) != v:
        raise ValueError("duplicate node ids")
    gains = np.zeros((v, v))
    for (a, b), val in gain_entries.items():
        if a == b:
            raise ValueError("self-gain entries are not allowed")
        gains[index[a], index[b]] = val
    noise_arr = np.full(v, noise) if np.isscalar(noise) else \
        np.array([noise[n] for n in node_ids], float)
    pmax_arr = np.full(v, pmax) if np.isscalar(pmax) else \
        np.array([pmax[n] for n in node_ids], float)
    links = [Link(index[a], index[b], f"{a}{b}") for a, b in link_pairs]
    one = None
    if one_hop_pairs is not None:
        one = np.zeros((v, v), bool)
        for a, b in one_hop_pairs:
            one[index[a], index[b]] = one[index[b], index[a]] = True
    return Topology(node_ids, links, gains, noise_arr, pmax_arr,
                    positions=None, explicit_one_hop=one)
