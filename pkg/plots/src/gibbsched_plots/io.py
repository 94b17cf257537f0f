"""Readers for the gibbsched interchange files.

The sweep CSV is the sole contract between the simulator and this package:
its first line pins the format version and its second names the columns, and
anything else is refused rather than guessed at. The profile CSV is the
piecewise-constant single-link decision profile dumped by the oracle tool.
"""
from __future__ import annotations

import csv

RESULTS_VERSION = "gibbsched-results-v1"
COLUMNS = ("policy", "load", "seed", "avg_total_queue", "verdict",
           "throughput", "config_hash")
PROFILE_HEADER = ("interval_start", "interval_end", "weight")


def read_results(path) -> list[dict]:
    """Parse a sweep results file, refusing any other format or version."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# {RESULTS_VERSION}":
            raise ValueError(
                f"unrecognized results format {first!r}; "
                f"expected '# {RESULTS_VERSION}'")
        reader = csv.DictReader(fh)
        if set(reader.fieldnames or ()) != set(COLUMNS):
            raise ValueError("results columns do not match the format version")
        rows = []
        for rec in reader:
            rows.append({
                "policy": rec["policy"],
                "load": float(rec["load"]),
                "seed": int(rec["seed"]),
                "avg_total_queue": float(rec["avg_total_queue"]),
                "verdict": rec["verdict"],
                "throughput": float(rec["throughput"]),
                "config_hash": rec["config_hash"],
            })
        return rows


def read_profile(path) -> list[tuple[float, float, float]]:
    """Parse a decision-profile dump into (start, end, weight) intervals."""
    with open(path) as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != PROFILE_HEADER:
            raise ValueError(
                f"unrecognized profile header {header!r}; "
                f"expected {','.join(PROFILE_HEADER)!r}")
        intervals = []
        for rec in reader:
            if len(rec) != 3:
                raise ValueError(f"malformed profile row {rec!r}")
            intervals.append((float(rec[0]), float(rec[1]), float(rec[2])))
    if not intervals:
        raise ValueError("profile file has no intervals")
    for (_, prev_end, _), (start, _, _) in zip(intervals, intervals[1:]):
        if start != prev_end:
            raise ValueError("profile intervals are not contiguous")
    return intervals
