"""Queue dynamics, arrival processes, and the slot-by-slot simulation loop.

Queues evolve as q' = max(q - r, 0) + A each slot: service first (capped by
what is actually queued), then new arrivals. The driver records the total
backlog trajectory and summarizes it into throughput, average backlog after
warm-up, and a stability verdict from the trend of the trajectory's tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WARMUP_FRACTION = 0.1
DEFAULT_SLOPE_THRESHOLD = 0.01
DEFAULT_R2_THRESHOLD = 0.5
MIN_VERDICT_SLOTS = 10_000


class RingArrivals:
    """Rotating deterministic packets plus Bernoulli background load.

    Each slot one packet arrives at link (t mod n) and one at link
    (t + n//2 mod n); on top, every link independently receives a packet
    with probability ``rho``. Mean load per link is 2/n + rho.
    """

    def __init__(self, n_links: int, rho: float):
        if not 0.0 <= rho <= 1.0:
            raise ValueError("rho must be a probability")
        self.n_links = n_links
        self.rho = rho

    def __call__(self, t: int, rng: np.random.Generator) -> np.ndarray:
        arr = (rng.random(self.n_links) < self.rho).astype(float)
        arr[t % self.n_links] += 1.0
        arr[(t + self.n_links // 2) % self.n_links] += 1.0
        return arr

    def mean_per_link(self) -> float:
        return 2.0 / self.n_links + self.rho


class PoissonArrivals:
    """Independent Poisson(lambda) packet counts per link per slot."""

    def __init__(self, n_links: int, lam: float):
        if lam < 0:
            raise ValueError("arrival rate must be nonnegative")
        self.n_links = n_links
        self.lam = lam

    def __call__(self, t: int, rng: np.random.Generator) -> np.ndarray:
        return rng.poisson(self.lam, self.n_links).astype(float)

    def mean_per_link(self) -> float:
        return self.lam


def step_queues(queues: np.ndarray, rates: np.ndarray, arrivals: np.ndarray):
    """One slot of queue evolution; returns (new_queues, served)."""
    served = np.minimum(queues, rates)
    return queues - served + arrivals, served


def fit_tail_trend(series: np.ndarray):
    """Least-squares slope and R^2 of the second half of a series."""
    tail = np.asarray(series, float)[len(series) // 2:]
    if tail.size < 2:
        return 0.0, 0.0
    x = np.arange(tail.size, dtype=float)
    slope, intercept = np.polyfit(x, tail, 1)
    resid = tail - (slope * x + intercept)
    ss_tot = float(np.sum((tail - tail.mean()) ** 2))
    if ss_tot == 0.0:
        return float(slope), 0.0
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), r2


def stability_verdict(series: np.ndarray,
                      slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
                      r2_threshold: float = DEFAULT_R2_THRESHOLD,
                      min_length: int = MIN_VERDICT_SLOTS) -> str:
    """"unstable" when the backlog tail trends up clearly, else "stable".

    Both conditions must hold: slope above threshold (packets per slot) and
    enough of the tail's variance explained by the trend to rule out noise.
    Series shorter than ``min_length`` carry too little evidence either way.
    """
    if len(series) < min_length:
        raise ValueError(f"series too short for a stability verdict "
                         f"({len(series)} < {min_length} slots)")
    slope, r2 = fit_tail_trend(series)
    return "unstable" if (slope > slope_threshold and r2 > r2_threshold) else "stable"


@dataclass
class SimResult:
    policy: str
    load: float
    seed: int | None
    horizon: int
    avg_total_queue: float
    throughput: float
    verdict: str
    total_queue_series: np.ndarray = field(repr=False)
    final_queues: np.ndarray = field(repr=False)
    arrived_total: float = 0.0
    served_total: float = 0.0


def run_simulation(policy, arrivals, horizon: int, *,
                   arrival_rng: np.random.Generator,
                   policy_rng: np.random.Generator,
                   initial_queues: np.ndarray | None = None,
                   load: float = float("nan"), seed: int | None = None,
                   warmup_fraction: float = WARMUP_FRACTION,
                   slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
                   r2_threshold: float = DEFAULT_R2_THRESHOLD) -> SimResult:
    """Drive one policy against one arrival process for ``horizon`` slots.

    Runs shorter than the verdict minimum are labeled "short" rather than
    judged stable or unstable on thin evidence.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least one slot")
    n = arrivals.n_links
    queues = np.zeros(n) if initial_queues is None else np.asarray(initial_queues, float).copy()
    initial_total = float(queues.sum())
    series = np.empty(horizon)
    arrived = 0.0
    served_after_warmup = 0.0
    served_all = 0.0
    warmup = int(horizon * warmup_fraction)
    for t in range(horizon):
        rates = policy.step(queues, policy_rng)
        arr = arrivals(t, arrival_rng)
        queues, served = step_queues(queues, rates, arr)
        s = float(served.sum())
        served_all += s
        if t >= warmup:
            served_after_warmup += s
        arrived += float(arr.sum())
        series[t] = queues.sum()

    # Packets are conserved: backlog change equals arrivals minus service.
    drift = (series[-1] if horizon else initial_total) - initial_total - arrived + served_all
    assert abs(drift) <= 1e-9 * max(1.0, arrived), f"queue accounting drift {drift}"

    measured = series[warmup:]
    if horizon >= MIN_VERDICT_SLOTS:
        verdict = stability_verdict(series, slope_threshold, r2_threshold)
    else:
        verdict = "short"
    return SimResult(
        policy=getattr(policy, "name", type(policy).__name__),
        load=load,
        seed=seed,
        horizon=horizon,
        avg_total_queue=float(measured.mean()) if measured.size else 0.0,
        throughput=served_after_warmup / max(horizon - warmup, 1),
        verdict=verdict,
        total_queue_series=series,
        final_queues=queues,
        arrived_total=arrived,
        served_total=served_all,
    )
