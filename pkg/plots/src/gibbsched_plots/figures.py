"""Figure builders for sweep results and decision profiles.

Each figure is split into a pure data step and a render step: the data
builders return plain JSON-friendly dicts that are easy to freeze in golden
files, and the render functions turn those dicts into matplotlib figures.
"""
from __future__ import annotations

import matplotlib

# This package only ever writes image files, so it never needs a display.
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

POLICY_STYLE = {
    "gibbs": ("tab:blue", "o"),
    "csma": ("tab:orange", "s"),
    "qcsma": ("tab:green", "^"),
}
FALLBACK_STYLE = ("tab:gray", "d")


def build_sweep_data(rows: list[dict]) -> dict:
    """Summarize sweep rows into per-policy backlog curves over load.

    Returns a dict with the shared config hash plus, per policy in
    first-appearance order, the sorted loads, the mean/min/max of the
    average total queue across seeds, and a flag marking loads where any
    seed was judged unstable.
    """
    if not rows:
        raise ValueError("results contain no rows")
    hashes = sorted({row["config_hash"] for row in rows})
    if len(hashes) > 1:
        raise ValueError(f"results mix config hashes {hashes}; "
                         f"plot one sweep at a time")
    grouped: dict[str, dict[float, list[dict]]] = {}
    for row in rows:
        grouped.setdefault(row["policy"], {}).setdefault(row["load"], []).append(row)
    data = {"config_hash": hashes[0], "policies": {}}
    for policy, by_load in grouped.items():
        loads = sorted(by_load)
        cells = [by_load[load] for load in loads]
        queues = [[row["avg_total_queue"] for row in cell] for cell in cells]
        data["policies"][policy] = {
            "loads": loads,
            "mean_queue": [float(np.mean(q)) for q in queues],
            "min_queue": [float(np.min(q)) for q in queues],
            "max_queue": [float(np.max(q)) for q in queues],
            "any_unstable": [any(row["verdict"] == "unstable" for row in cell)
                             for cell in cells],
        }
    return data


def build_profile_data(intervals: list[tuple[float, float, float]]) -> dict:
    """Turn contiguous profile intervals into staircase breakpoints/weights."""
    if not intervals:
        raise ValueError("profile has no intervals")
    breakpoints = [intervals[0][0]] + [end for _, end, _ in intervals]
    weights = [weight for _, _, weight in intervals]
    return {"breakpoints": breakpoints, "weights": weights}


def render_sweep(data: dict):
    """Draw average backlog vs offered load, one curve per policy.

    Lines follow the across-seed mean, the shaded band spans the seed
    min/max, and a black 'x' marks loads where any seed was judged
    unstable. The y axis is logarithmic: a diverging backlog separates
    from a stable one by orders of magnitude.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    flagged = False
    for policy, curve in data["policies"].items():
        color, marker = POLICY_STYLE.get(policy, FALLBACK_STYLE)
        loads = curve["loads"]
        ax.plot(loads, curve["mean_queue"], color=color, marker=marker,
                markersize=4, label=policy)
        ax.fill_between(loads, curve["min_queue"], curve["max_queue"],
                        color=color, alpha=0.2, linewidth=0)
        bad = [i for i, unstable in enumerate(curve["any_unstable"]) if unstable]
        if bad:
            ax.plot([loads[i] for i in bad],
                    [curve["mean_queue"][i] for i in bad],
                    linestyle="none", marker="x", markersize=9, color="black",
                    label=None if flagged else "unstable (any seed)")
            flagged = True
    ax.set_yscale("log")
    ax.set_xlabel("offered load")
    ax.set_ylabel("average total queue (pkts)")
    ax.set_title(f"backlog vs load — config {data['config_hash']}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render_profile(data: dict):
    """Draw the piecewise-constant decision profile over transmit power.

    Dotted verticals mark the interior breakpoints, where the updating
    link's best modulation target (its own or an interferer's) changes.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.stairs(data["weights"], data["breakpoints"], baseline=None,
              color="tab:blue", linewidth=2)
    for power in data["breakpoints"][1:-1]:
        ax.axvline(power, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("transmit power")
    ax.set_ylabel("profile weight")
    ax.set_title("single-link decision profile")
    fig.tight_layout()
    return fig
