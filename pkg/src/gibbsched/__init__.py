"""gibbsched: time-slotted wireless scheduling with annealed Gibbs power control.

Simulates queued traffic over interfering wireless links under three MAC/power
policies — a distributed Gibbs sampler that jointly picks transmit powers and
modulation schemes, a carrier-sense (CSMA) baseline, and a queue-weighted
CSMA variant — plus a brute-force oracle for small networks and a CLI for
running load-sweep experiments to versioned CSV.
"""

__version__ = "0.1.0"

from .topology import (
    Link,
    ModulationTable,
    NeighborhoodMap,
    Topology,
    build_gain_matrix,
    compute_neighborhoods,
    default_modulation_table,
    explicit_topology,
    pair_modulation_table,
    random_topology,
    ring_topology,
)

__all__ = [
    "Link",
    "ModulationTable",
    "NeighborhoodMap",
    "Topology",
    "build_gain_matrix",
    "compute_neighborhoods",
    "default_modulation_table",
    "explicit_topology",
    "pair_modulation_table",
    "random_topology",
    "ring_topology",
    "__version__",
]
