"""Experiment configuration: TOML ``.cfg`` files into validated run plans.

A config names a topology, the policies to sweep, an arrival process with a
load grid, and the run horizon/seeds. Loading resolves every default so two
configs hash equal exactly when they describe the same experiment; the hash
is stamped into every results row. Unknown sections or keys are rejected
outright — a typo must fail loudly, not silently fall back to a default.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .mac import DEFAULT_CONTROL_SLOTS
from .phy import LinkSystem, build_link_system
from .scheduler import DEFAULT_PERIOD, POLICIES
from .sim import (
    DEFAULT_R2_THRESHOLD,
    DEFAULT_SLOPE_THRESHOLD,
    WARMUP_FRACTION,
    PoissonArrivals,
    RingArrivals,
)
from .topology import (
    DEFAULT_NEIGHBOR_GAIN_THRESHOLD,
    DEFAULT_PATH_LOSS_EXPONENT,
    ModulationTable,
    Topology,
    default_modulation_table,
    explicit_topology,
    random_topology,
    ring_topology,
)

_SCHEMA = {
    "topology": {"kind", "n_links", "link_length_m", "carrier_sense_range_m",
                 "area_side_m", "pmax", "noise", "seed", "path_loss_exponent",
                 "nodes", "links", "gains", "one_hop"},
    "table": {"names", "rates", "min_sinr", "min_sinr_db"},
    "policy": {"policies", "epsilon_per_power_unit", "period_slots", "k0",
               "control_slots", "anneal_horizon_slots",
               "neighbor_gain_threshold"},
    "arrivals": {"kind", "loads"},
    "run": {"horizon_slots", "seeds", "warmup_fraction", "slope_threshold",
            "r2_threshold"},
    "oracle": {"queues", "epsilon_per_power_unit", "powers", "profile_link"},
}

_TOPOLOGY_REQUIRED = {
    "ring": {"n_links"},
    "random": {"n_links", "area_side_m", "seed"},
    "explicit": {"nodes", "links", "gains", "noise", "pmax"},
}


def _reject_unknown(raw: dict) -> None:
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ValueError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ValueError(f"config section [{section}] must be a table")
        for key in body:
            if key not in _SCHEMA[section]:
                raise ValueError(f"unknown config key '{section}.{key}'")


def load_config(path) -> dict:
    """Parse, validate, and resolve a config file; returns the full plan."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    """Fill every default and sanity-check cross-field constraints."""
    _reject_unknown(raw)
    if "topology" not in raw:
        raise ValueError("config needs a [topology] section")
    topo = dict(raw["topology"])
    kind = topo.get("kind")
    if kind not in _TOPOLOGY_REQUIRED:
        raise ValueError(f"topology.kind must be one of "
                         f"{sorted(_TOPOLOGY_REQUIRED)}, got {kind!r}")
    missing = _TOPOLOGY_REQUIRED[kind] - set(topo)
    if missing:
        raise ValueError(f"{kind} topology needs keys {sorted(missing)}")

    policy = dict(raw.get("policy", {}))
    policy.setdefault("policies", ["gibbs", "csma", "qcsma"])
    for name in policy["policies"]:
        if name not in POLICIES:
            raise ValueError(f"unknown policy {name!r} in policy.policies")
    policy.setdefault("epsilon_per_power_unit", 0.01)
    policy.setdefault("period_slots", DEFAULT_PERIOD)
    policy.setdefault("k0", "auto")
    policy.setdefault("control_slots", DEFAULT_CONTROL_SLOTS)
    policy.setdefault("anneal_horizon_slots", None)
    policy.setdefault("neighbor_gain_threshold",
                      DEFAULT_NEIGHBOR_GAIN_THRESHOLD)

    arrivals = dict(raw.get("arrivals", {}))
    if arrivals:
        if arrivals.get("kind") not in ("ring", "poisson"):
            raise ValueError("arrivals.kind must be 'ring' or 'poisson'")
        loads = arrivals.get("loads")
        if not loads:
            raise ValueError("arrivals.loads must be a non-empty list")
        arrivals["loads"] = [float(x) for x in loads]

    run = dict(raw.get("run", {}))
    if run:
        if "horizon_slots" not in run or int(run["horizon_slots"]) < 1:
            raise ValueError("run.horizon_slots must be a positive integer")
        run["horizon_slots"] = int(run["horizon_slots"])
        seeds = run.get("seeds")
        if not seeds:
            raise ValueError("run.seeds must be a non-empty list")
        run["seeds"] = [int(s) for s in seeds]
        run.setdefault("warmup_fraction", WARMUP_FRACTION)
        run.setdefault("slope_threshold", DEFAULT_SLOPE_THRESHOLD)
        run.setdefault("r2_threshold", DEFAULT_R2_THRESHOLD)

    table = dict(raw["table"]) if "table" in raw else None
    if table is not None:
        has_lin, has_db = "min_sinr" in table, "min_sinr_db" in table
        if has_lin == has_db:
            raise ValueError("table needs exactly one of min_sinr/min_sinr_db")
        if "rates" not in table:
            raise ValueError("table.rates is required")

    oracle = dict(raw.get("oracle", {})) or None
    if oracle is not None:
        if "queues" not in oracle:
            raise ValueError("oracle.queues is required in [oracle]")
        oracle.setdefault("epsilon_per_power_unit",
                          policy["epsilon_per_power_unit"])

    return {"topology": topo, "table": table, "policy": policy,
            "arrivals": arrivals or None, "run": run or None,
            "oracle": oracle}


def config_hash(resolved: dict) -> str:
    """Stable short digest of the resolved plan (order-independent)."""
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# builders


def build_table(resolved: dict) -> ModulationTable | None:
    spec = resolved.get("table")
    if spec is None:
        return None
    rates = np.asarray(spec["rates"], float)
    if "min_sinr_db" in spec:
        sinr = 10.0 ** (np.asarray(spec["min_sinr_db"], float) / 10.0)
    else:
        sinr = np.asarray(spec["min_sinr"], float)
    names = tuple(spec.get("names",
                           [f"scheme{i}" for i in range(rates.size)]))
    return ModulationTable(names, rates, sinr)


def build_topology(resolved: dict) -> Topology:
    spec = resolved["topology"]
    kind = spec["kind"]
    table = build_table(resolved)
    if kind == "ring":
        return ring_topology(
            int(spec["n_links"]),
            link_length=float(spec.get("link_length_m", 20.0)),
            carrier_sense_range=float(spec.get("carrier_sense_range_m", 40.0)),
            pmax=float(spec.get("pmax", 100.0)),
            noise=spec.get("noise", "auto-3db"),
            table=table,
            exponent=float(spec.get("path_loss_exponent",
                                    DEFAULT_PATH_LOSS_EXPONENT)))
    if kind == "random":
        return random_topology(
            int(spec["n_links"]), float(spec["area_side_m"]),
            link_length=float(spec.get("link_length_m", 20.0)),
            carrier_sense_range=float(spec.get("carrier_sense_range_m", 200.0)),
            pmax=float(spec.get("pmax", 100.0)),
            noise=spec.get("noise", "auto-3db"),
            table=table,
            exponent=float(spec.get("path_loss_exponent",
                                    DEFAULT_PATH_LOSS_EXPONENT)),
            seed=int(spec["seed"]))
    gains = {(a, b): float(v) for a, b, v in spec["gains"]}
    one_hop = [tuple(p) for p in spec["one_hop"]] if "one_hop" in spec else None
    return explicit_topology(
        node_ids=list(spec["nodes"]),
        link_pairs=[tuple(p) for p in spec["links"]],
        gain_entries=gains,
        noise=spec["noise"], pmax=spec["pmax"],
        one_hop_pairs=one_hop)


def build_system(resolved: dict) -> LinkSystem:
    table = build_table(resolved)
    if table is None:
        table = default_modulation_table()
    return build_link_system(build_topology(resolved), table,
                             alpha=resolved["policy"]["neighbor_gain_threshold"])


def make_arrivals(resolved: dict, n_links: int, load: float):
    kind = resolved["arrivals"]["kind"]
    if kind == "ring":
        return RingArrivals(n_links, rho=load)
    return PoissonArrivals(n_links, lam=load)


@dataclass(frozen=True)
class RowSpec:
    """One sweep cell: a policy at a load with a seed."""

    policy: str
    load: float
    seed: int

    def __str__(self):
        return f"{self.policy}@{self.load:g}#{self.seed}"


def sweep_rows(resolved: dict) -> list[RowSpec]:
    """The full run plan, ordered policy-major then load then seed."""
    if resolved["arrivals"] is None or resolved["run"] is None:
        raise ValueError("running a sweep needs [arrivals] and [run] sections")
    return [RowSpec(policy, load, seed)
            for policy in resolved["policy"]["policies"]
            for load in resolved["arrivals"]["loads"]
            for seed in resolved["run"]["seeds"]]
