"""Versioned delimited output: one row per (policy, load, seed) cell.

The first line pins the format version so downstream consumers can refuse
files they do not understand; the second is the column header. Floats are
written with full round-trip precision, so a re-run of the same config is
byte-identical.
"""
from __future__ import annotations

import csv
import io

RESULTS_VERSION = "gibbsched-results-v1"
COLUMNS = ("policy", "load", "seed", "avg_total_queue", "verdict",
           "throughput", "config_hash")


def format_results(rows: list[dict]) -> str:
    """Render result rows to the versioned CSV text."""
    buf = io.StringIO()
    buf.write(f"# {RESULTS_VERSION}\n")
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["load"] = repr(float(row["load"]))
        out["avg_total_queue"] = repr(float(row["avg_total_queue"]))
        out["throughput"] = repr(float(row["throughput"]))
        writer.writerow({k: out[k] for k in COLUMNS})
    return buf.getvalue()


def write_results(path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write(format_results(rows))


def read_results(path) -> list[dict]:
    """Parse a results file, refusing any other format or version."""
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
