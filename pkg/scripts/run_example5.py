#!/usr/bin/env python3
"""Run the full N = 4 power example (threshold, solve at lambda*/2, sweep) into a results directory."""

import argparse
import sys

from hypsolve.cli import run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/example5")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    argv = ["--command", "example5", "--out", args.out, "--seed", str(args.seed)]
    for s in args.set:
        argv += ["--set", s]
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
