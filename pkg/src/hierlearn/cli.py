"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric failure
(divergence in a required run, or a failed verification).
"""

from __future__ import annotations

import argparse
import csv as _csv
import sys

import numpy as np

from . import harness
from .harness import ConfigError
from .lowerbound import CubeFunction, walsh_hadamard

SUITE_COMMANDS = {
    "run-exp1": "exp1",
    "run-exp2": "exp2",
    "run-mincomplexity": "mincomplexity",
    "run-separation": "separation",
    "verify-hermite": "hermite-verify",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hierlearn",
        description="Hierarchical-learning separation experiments.")
    sub = p.add_subparsers(dest="command")
    for name in SUITE_COMMANDS:
        sp = sub.add_parser(name, help=f"run the {SUITE_COMMANDS[name]} suite")
        _common_flags(sp, config_required=name != "verify-hermite")
    gc = sub.add_parser("gradcheck", help="finite-difference gradient check")
    gc.add_argument("--models", type=int, default=50)
    gc.add_argument("--step", type=float, default=1e-5)
    gc.add_argument("--tolerance", type=float, default=1e-5)
    gc.add_argument("--seeds", default="0")
    fr = sub.add_parser("fourier", help="Walsh-Hadamard transform of a value table")
    fr.add_argument("--csv", required=True,
                    help="single-column CSV of 2^d values (header 'value')")
    fr.add_argument("--out", required=True, help="output coefficients CSV")
    return p


def _common_flags(sp, config_required=True):
    sp.add_argument("--config", required=config_required,
                    help="TOML experiment config")
    sp.add_argument("--out", help="output directory override")
    sp.add_argument("--seeds", help="comma-separated seed override")
    sp.add_argument("--threads", type=int, default=1,
                    help="max parallel grid cells (numeric output is "
                         "independent of this value)")
    sp.add_argument("--dry-run", action="store_true",
                    help="validate the config and exit without writing")


def _parse_seeds(text: str):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as e:
        raise ConfigError(f"bad --seeds value {text!r}") from e


def _run_suite_command(args, suite: str) -> int:
    if getattr(args, "config", None):
        cfg = harness.load_config(args.config)
        if cfg.suite != suite:
            raise ConfigError(
                f"config declares suite {cfg.suite!r}, command expects {suite!r}")
    else:
        cfg = harness.ExperimentConfig(suite=suite)
    if args.out:
        cfg.out_dir = args.out
    if args.seeds:
        seeds = _parse_seeds(args.seeds)
        if len(seeds) == 0:
            raise ConfigError("--seeds must name at least one seed")
        cfg.seeds = seeds
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if args.dry_run:
        print(f"config ok: suite={cfg.suite} seeds={list(cfg.seeds)} "
              f"out_dir={cfg.out_dir}")
        return 0
    try:
        paths = harness.run_suite(cfg)
    except harness._rn.TrainingDivergedError as e:
        print(f"required run diverged: {e}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    if suite == "hermite-verify":
        with open(paths[0]) as fh:
            rows = list(_csv.DictReader(fh))
        bad = [r for r in rows if r["ok"] != "True"]
        if bad:
            print(f"{len(bad)} of {len(rows)} grid points out of tolerance",
                  file=sys.stderr)
            return 3
    return 0


def _run_gradcheck(args) -> int:
    seeds = _parse_seeds(args.seeds)
    worst = max(harness.gradcheck_suite(n_models=args.models, h=args.step,
                                        seed=s) for s in seeds)
    print(f"max relative error: {worst:.3e}")
    return 0 if worst <= args.tolerance else 3


def _run_fourier(args) -> int:
    with open(args.csv) as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header != ["value"]:
            raise ConfigError(f"expected header ['value'], got {header}")
        values = [float(r[0]) for r in reader]
    n = len(values)
    d = n.bit_length() - 1
    if n == 0 or (1 << d) != n:
        raise ConfigError(f"value count {n} is not a power of two")
    lam = walsh_hadamard(CubeFunction(d, np.array(values)))
    with open(args.out, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["subset_mask", "coefficient"])
        for mask, c in enumerate(lam):
            w.writerow([mask, repr(float(c))])
    print(args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors already; normalize --help to 0
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command in SUITE_COMMANDS:
            return _run_suite_command(args, SUITE_COMMANDS[args.command])
        if args.command == "gradcheck":
            return _run_gradcheck(args)
        if args.command == "fourier":
            return _run_fourier(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    parser.print_usage(sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
