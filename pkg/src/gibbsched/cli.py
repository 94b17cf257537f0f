"""Command-line experiment driver.

Subcommands:
  run       execute a sweep from a config file into results.csv + metadata
  oracle    exhaustively solve a small network from a config's [oracle] section
  validate  run the statistical self-check battery, print a JSON report
  presets   list bundled example configs, or copy one out to edit

Output location precedence: --out flag, then $GIBBSCHED_OUT, then ./results.
Every row draws its random streams from a seed sequence derived from
(seed, policy, load) alone, so rows can run in any order, in parallel, or
one at a time and produce identical results.
"""
from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    build_system,
    config_hash,
    load_config,
    make_arrivals,
    sweep_rows,
)
from .gibbs import build_profile
from .oracle import brute_force_optimum
from .results import write_results
from .scheduler import make_policy
from .sim import run_simulation
from .validate import run_validation

OUT_ENV_VAR = "GIBBSCHED_OUT"
POLICY_IDS = {"gibbs": 1, "csma": 2, "qcsma": 3}


def row_seed_sequence(seed: int, policy: str, load: float) -> np.random.SeedSequence:
    """Content-addressed stream for one row; order- and schedule-independent."""
    return np.random.SeedSequence([seed, POLICY_IDS[policy],
                                   int(round(load * 1e6))])


def execute_row(resolved: dict, policy_name: str, load: float, seed: int,
                keep_series: bool = False) -> dict:
    """Build everything fresh and run one sweep cell."""
    system = build_system(resolved)
    pol_cfg = resolved["policy"]
    policy = make_policy(policy_name, system,
                         epsilon=pol_cfg["epsilon_per_power_unit"],
                         period=pol_cfg["period_slots"],
                         k0=pol_cfg["k0"],
                         control_slots=pol_cfg["control_slots"],
                         anneal_horizon=pol_cfg["anneal_horizon_slots"])
    arrivals = make_arrivals(resolved, system.n_links, load)
    arrival_rng, policy_rng = [np.random.default_rng(s) for s in
                               row_seed_sequence(seed, policy_name, load).spawn(2)]
    run_cfg = resolved["run"]
    res = run_simulation(policy, arrivals, run_cfg["horizon_slots"],
                         arrival_rng=arrival_rng, policy_rng=policy_rng,
                         load=load, seed=seed,
                         warmup_fraction=run_cfg["warmup_fraction"],
                         slope_threshold=run_cfg["slope_threshold"],
                         r2_threshold=run_cfg["r2_threshold"])
    row = {"policy": res.policy, "load": load, "seed": seed,
           "avg_total_queue": res.avg_total_queue, "verdict": res.verdict,
           "throughput": res.throughput}
    if keep_series:
        row["series"] = res.total_queue_series
    return row


def _pool_worker(payload):
    resolved, policy, load, seed, trace = payload
    return execute_row(resolved, policy, load, seed, keep_series=trace)


def resolve_out_dir(flag_value) -> Path:
    if flag_value:
        return Path(flag_value)
    return Path(os.environ.get(OUT_ENV_VAR, "results"))


def _parse_only(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("--only expects policy,load,seed")
    return parts[0], float(parts[1]), int(parts[2])


def cmd_run(args) -> int:
    resolved = load_config(args.config)
    if args.seed is not None and resolved["run"] is not None:
        resolved["run"]["seeds"] = [args.seed]
    rows = sweep_rows(resolved)
    if args.only:
        policy, load, seed = _parse_only(args.only)
        rows = [r for r in rows
                if r.policy == policy and r.load == load and r.seed == seed]
        if not rows:
            print(f"--only {args.only} matches no sweep row", file=sys.stderr)
            return 2
    chash = config_hash(resolved)
    if args.dry_run:
        print(f"config {args.config} -> hash {chash}, {len(rows)} rows:")
        for r in rows:
            print(f"  {r.policy:7s} load={r.load:<10g} seed={r.seed}")
        return 0

    payloads = [(resolved, r.policy, r.load, r.seed, args.trace) for r in rows]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            done = pool.map(_pool_worker, payloads)
    else:
        done = [_pool_worker(p) for p in payloads]

    out_dir = resolve_out_dir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for row in done:
        row["config_hash"] = chash
        if args.trace:
            series = row.pop("series")
            name = f"trace-{row['policy']}-{row['load']:g}-{row['seed']}.csv"
            trace_dir = out_dir / "traces"
            trace_dir.mkdir(exist_ok=True)
            with open(trace_dir / name, "w") as fh:
                fh.write("slot,total_queue\n")
                fh.writelines(f"{t},{float(q)!r}\n" for t, q in enumerate(series))
    write_results(out_dir / "results.csv", done)
    meta = {"config_hash": chash, "version": __version__,
            "rows": len(done), "source_config": str(args.config),
            "resolved_config": resolved}
    with open(out_dir / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(done)} rows to {out_dir / 'results.csv'} (config {chash})")
    return 0


def cmd_oracle(args) -> int:
    resolved = load_config(args.config)
    spec = resolved["oracle"]
    if spec is None:
        print("config has no [oracle] section", file=sys.stderr)
        return 2
    system = build_system(resolved)
    queues = np.asarray(spec["queues"], float)
    epsilon = spec["epsilon_per_power_unit"]
    if args.dump_profile:
        if "powers" not in spec or "profile_link" not in spec:
            print("--dump-profile needs oracle.powers and oracle.profile_link",
                  file=sys.stderr)
            return 2
        link = system.topology.link_index(spec["profile_link"])
        profile = build_profile(system, np.asarray(spec["powers"], float),
                                link, queues)
        Path(args.dump_profile).write_text(profile.to_csv())
        print(f"wrote profile of link {spec['profile_link']} "
              f"to {args.dump_profile}")
        return 0
    res = brute_force_optimum(system, queues, epsilon)
    report = {"config_hash": config_hash(resolved),
              "queues": queues.tolist(), "epsilon": epsilon,
              "powers": res.powers.tolist(), "objective": res.objective,
              "rates": res.rates.tolist(), "schemes": res.schemes.tolist(),
              "assignments_tried": res.assignments_tried,
              "link_names": system.topology.link_names}
    print(json.dumps(report, indent=2))
    return 0


def cmd_validate(args) -> int:
    report = run_validation(quick=args.quick,
                            corrupt_sampler=args.corrupt_sampler,
                            seed=args.seed)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out_dir = resolve_out_dir(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "validation.json").write_text(text + "\n")
    return 0 if report["pass"] else 1


def cmd_presets(args) -> int:
    root = resources.files("gibbsched").joinpath("presets")
    names = sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))
    if not args.name:
        for name in names:
            first = root.joinpath(name).read_text().splitlines()[0]
            print(f"{name:24s} {first.lstrip('# ')}")
        return 0
    fname = args.name if args.name.endswith(".cfg") else args.name + ".cfg"
    if fname not in names:
        print(f"no preset {args.name!r}; available: "
              f"{', '.join(n[:-4] for n in names)}", file=sys.stderr)
        return 2
    out_dir = resolve_out_dir(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / fname
    target.write_text(root.joinpath(fname).read_text())
    print(f"wrote {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsched",
        description="Wireless-scheduling experiments: annealed Gibbs power "
                    "control against CSMA baselines.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a sweep from a config file")
    p.add_argument("config", help="path to a .cfg (TOML) experiment file")
    p.add_argument("--seed", type=int, default=None,
                   help="replace the config's seed list with this one seed")
    p.add_argument("--out", default=None,
                   help=f"output directory (default: ${OUT_ENV_VAR} or ./results)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for sweep rows")
    p.add_argument("--dry-run", action="store_true",
                   help="print the row plan and config hash, write nothing")
    p.add_argument("--only", default=None, metavar="POLICY,LOAD,SEED",
                   help="run a single sweep row")
    p.add_argument("--trace", action="store_true",
                   help="also write per-slot total-queue traces")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="exhaustive optimum of a small network")
    p.add_argument("config", help="config file with an [oracle] section")
    p.add_argument("--dump-profile", default=None, metavar="PATH",
                   help="write the configured link's conditional power "
                        "profile as CSV instead of solving")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="statistical self-check battery")
    p.add_argument("--quick", action="store_true",
                   help="smaller samples, for smoke checks")
    p.add_argument("--corrupt-sampler", action="store_true",
                   help="sabotage the sampler to prove the checks can fail")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None,
                   help="also write validation.json to this directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("presets", help="list or copy bundled example configs")
    p.add_argument("name", nargs="?", default=None,
                   help="preset to copy out (omit to list)")
    p.add_argument("--out", default=None, help="directory to copy into")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
