"""Command line driver: render figures from gibbsched output files.

    gibbsched-plot sweep results.csv [-o figure.png]
    gibbsched-plot profile profile.csv [-o figure.svg]

With -o the file extension picks the image format; without it both a PNG
and an SVG are written in the current directory, named after the figure
(and, for sweeps, the config hash).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, figures, io


def save_figure(fig, out: str | None, default_stem: str) -> None:
    paths = ([Path(out)] if out is not None else
             [Path(f"{default_stem}.png"), Path(f"{default_stem}.svg")])
    for path in paths:
        fig.savefig(path, dpi=150)
        print(f"wrote {path}")


def cmd_sweep(args) -> None:
    rows = io.read_results(args.results)
    data = figures.build_sweep_data(rows)
    save_figure(figures.render_sweep(data), args.out,
                f"sweep-{data['config_hash']}")


def cmd_profile(args) -> None:
    intervals = io.read_profile(args.profile)
    data = figures.build_profile_data(intervals)
    save_figure(figures.render_profile(data), args.out, "profile")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsched-plot",
        description="Render figures from gibbsched output files.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser(
        "sweep", help="average backlog vs offered load, one curve per policy")
    p_sweep.add_argument("results", help="versioned results CSV from a sweep run")
    p_sweep.add_argument("-o", "--out", help="output image path (extension "
                         "picks the format); default writes PNG and SVG")
    p_sweep.set_defaults(func=cmd_sweep)

    p_profile = sub.add_parser(
        "profile", help="single-link decision profile staircase")
    p_profile.add_argument("profile", help="profile CSV dumped by the oracle tool")
    p_profile.add_argument("-o", "--out", help="output image path (extension "
                           "picks the format); default writes PNG and SVG")
    p_profile.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
