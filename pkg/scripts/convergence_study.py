#!/usr/bin/env python3
"""Grid refinement study of the minimizer norm and energy at a fixed lambda.

Prints one CSV row per grid: M, R_max, norm, energy, relative change in norm
against the finest grid, and iteration count.
"""

import argparse
import csv
import sys

from hypsolve.problem import Problem, example5_declaration
from hypsolve.solver import SolveConfig, minimize_sublevel
from hypsolve.threshold import compute_threshold


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[256, 512, 1024, 2048, 4096])
    ap.add_argument("--r-max", type=float, nargs="+", default=[10.0])
    ap.add_argument("--lam", type=float, default=None, help="defaults to lambda*/2 of the default grid")
    args = ap.parse_args()

    base = Problem.from_declaration(example5_declaration())
    thr = compute_threshold(base, seed=0)
    lam = args.lam if args.lam is not None else thr.lambda_star / 2
    rows = []
    for R in args.r_max:
        for M in args.grids:
            decl = example5_declaration()
            decl["grid"] = {**decl["grid"], "M": M, "R_max": R}
            problem = Problem.from_declaration(decl)
            rep = minimize_sublevel(SolveConfig(lam=lam, omega_bar=thr.omega_star), problem, thr)
            rows.append({"M": problem.grid.M, "R_max": R, "norm": rep.norm, "energy": rep.energy,
                         "iterations": rep.iterations})
    ref = rows[-1]["norm"]
    w = csv.DictWriter(sys.stdout, fieldnames=["M", "R_max", "norm", "energy", "rel_change", "iterations"])
    w.writeheader()
    for row in rows:
        w.writerow({**row, "rel_change": abs(row["norm"] - ref) / ref})
    return 0


if __name__ == "__main__":
    sys.exit(main())
