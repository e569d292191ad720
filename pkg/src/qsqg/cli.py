"""Command-line front end for the experiment suite.

``qsqg <experiment> [flags]`` runs one experiment (or ``all``), prints a
short console summary including wall-clock time, and persists deterministic
artifacts under --out.  Exit status is 0 exactly when every hard check
passed; soft thresholds only print warnings.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .corpus import DEFAULT_SEED
from .fields import GridSpec, SpaceParams
from .sweep import BoxSweepConfig
from .experiments import RUNNERS, ExperimentConfig, persist


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsqg",
        description="Experiments for the dissipative surface quasi-geostrophic "
                    "equation on the periodic plane.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in list(RUNNERS) + ["all"]:
        p = sub.add_parser(name, help=f"run the '{name}' experiment" if name != "all"
                           else "run every experiment in sequence")
        p.add_argument("--alpha", type=float, default=0.25)
        p.add_argument("--beta", type=float, default=0.75)
        p.add_argument("--grid", type=int, default=64, metavar="N",
                       help="points per side (even)")
        p.add_argument("--length", type=float, default=2 * math.pi,
                       help="domain side length")
        p.add_argument("--horizon", type=float, default=1.0,
                       help="final time of the solver grid")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--corpus-size", type=int, default=50)
        p.add_argument("--solver-nodes", type=int, default=32)
        p.add_argument("--radii", type=int, default=3,
                       help="number of dyadic box radii in norm sweeps")
        p.add_argument("--time-nodes", type=int, default=16,
                       help="quadrature nodes per semigroup time ladder")
        p.add_argument("--out", type=Path, default=Path("qsqg-out"),
                       help="artifact directory")
        p.add_argument("--config", type=Path, default=None,
                       help="JSON file whose keys override the flags above")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw = {
        "alpha": args.alpha, "beta": args.beta,
        "grid": args.grid, "length": args.length,
        "horizon": args.horizon, "seed": args.seed,
        "corpus_size": args.corpus_size, "solver_nodes": args.solver_nodes,
        "radii": args.radii, "time_nodes": args.time_nodes,
    }
    if args.config is not None:
        overrides = json.loads(Path(args.config).read_text())
        unknown = set(overrides) - set(raw)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        raw.update(overrides)
    return ExperimentConfig(
        params=SpaceParams(raw["alpha"], raw["beta"]),
        grid=GridSpec(int(raw["grid"]), float(raw["length"])),
        sweep=BoxSweepConfig(int(raw["radii"]), int(raw["time_nodes"])),
        horizon=float(raw["horizon"]),
        seed=int(raw["seed"]),
        corpus_size=int(raw["corpus_size"]),
        solver_nodes=int(raw["solver_nodes"]),
    )


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    names = list(RUNNERS) if args.experiment == "all" else [args.experiment]

    failed = False
    for name in names:
        report = RUNNERS[name](cfg)
        path = persist(report, args.out)
        print(f"[{name}] wall time {report.wall_seconds:.2f}s, "
              f"artifacts in {path}")
        for key, value in report.summary.items():
            print(f"[{name}]   {key} = {value}")
        for w in report.warnings:
            print(f"[{name}] warning: {w}")
        for h in report.hard_failures:
            print(f"[{name}] FAILED: {h}")
        print(f"[{name}] {'pass' if report.passed else 'FAIL'}")
        failed = failed or not report.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
