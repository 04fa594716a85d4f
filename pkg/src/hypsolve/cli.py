"""Batch front end: one process, one command.

    python -m hypsolve.cli --command example5 --out results/
    python -m hypsolve.cli --problem p.json --command solve --set lambda=10 --set grid.M=512

Exit codes: 0 success, 1 validation failure, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from hypsolve.geometry import montecarlo_integral_dmu, property_checks
from hypsolve.problem import Problem, apply_overrides, example5_declaration
from hypsolve.radial import radial_integral
from hypsolve.solver import SolveConfig, lambda_sweep, minimize_sublevel, verify_weak_solution
from hypsolve.testfn import build_plateau, negativity_diagnostic, power_crossing, ratio_blowup_diagnostic
from hypsolve.threshold import compute_threshold

COMMANDS = ("threshold", "testfn", "solve", "sweep", "example5", "geomcheck")
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2

log = logging.getLogger("hypsolve")


def dumps(obj, indent: int = 0) -> str:
    """JSON with floats fixed at 17 significant digits; non-finite floats become strings."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return f"{x:.17g}" if math.isfinite(x) else json.dumps(str(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(dumps(v, indent + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n")


def _config_record(args, decl) -> dict:
    return {"command": args.command, "seed": args.seed, "overrides": list(args.set or []), "problem": decl}


def _threshold(problem, seed):
    return compute_threshold(problem, seed=seed)


def cmd_threshold(problem, args, out: Path, record) -> int:
    rep = _threshold(problem, args.seed)
    write_json(out / "threshold.json", {**rep.to_dict(), "run": record})
    return EXIT_OK


def cmd_testfn(problem, args, out: Path, record) -> int:
    thr = _threshold(problem, args.seed)
    rho, r = problem.plateau
    w = build_plateau(rho, r, problem.grid)
    lam = float(problem.declaration.get("lambda", thr.lambda_star / 2))
    alpha, nl = problem.weight, problem.nonlinearity
    ratio = ratio_blowup_diagnostic(w, nl, alpha, lam=lam, omega_bar=thr.omega_star)
    neg = negativity_diagnostic(w, nl, alpha, lam, omega_bar=thr.omega_star)
    ratio.to_csv(out / "ratio_blowup.csv")
    neg.to_csv(out / "negativity.csv")
    summary = {"lambda": lam, "blowup": ratio.blowup, "first_negative_t": neg.first_negative_t,
               "plateau": {"rho": rho, "r": r}, "run": record}
    if nl.kind == "power" and nl.declaration["r"] < 2:
        summary["predicted_crossing_t"] = power_crossing(w, nl, alpha, lam)
    write_json(out / "testfn.json", summary)
    return EXIT_OK


def _solve_config(problem, lam, omega_bar=None) -> SolveConfig:
    s = problem.declaration.get("solver", {})
    return SolveConfig(lam=lam, omega_bar=problem.declaration.get("omega_bar", omega_bar),
                       max_iters=int(s.get("max_iters", 2000)), grad_tol=float(s.get("grad_tol", 1e-8)))


def _solve(problem, args, out: Path, record, thr) -> tuple[int, dict]:
    lam = float(problem.declaration.get("lambda", thr.lambda_star / 2))
    rep = minimize_sublevel(_solve_config(problem, lam), problem, thr)
    verified = verify_weak_solution(rep.minimizer, lam, problem, tol=1e-6, seed=args.seed)
    data = {**rep.to_dict(), "relative_residual": rep.relative_residual if rep.norm > 0 else None,
            "verified": verified, "run": record}
    write_json(out / "solve_report.json", data)
    rep.minimizer.to_csv(out / "minimizer.csv")
    return (EXIT_OK if rep.converged else EXIT_NONCONVERGED), data


def cmd_solve(problem, args, out: Path, record) -> int:
    thr = _threshold(problem, args.seed)
    return _solve(problem, args, out, record, thr)[0]


def _sweep(problem, args, out: Path, record, thr) -> tuple[int, dict]:
    lambdas = problem.declaration.get("lambdas") or [thr.lambda_star / 2**k for k in range(1, 9)]
    result = lambda_sweep(lambdas, problem, _solve_config(problem, lambdas[0]), thr)
    result.to_csv(out / "sweep.csv")
    rows = list(result.rows())
    norms = [row["norm"] for row in rows]
    data = {
        "norm_decay_constant": result.norm_decay_constant,
        "aborted": result.aborted,
        "strictly_decreasing": all(b < a for a, b in zip(norms, norms[1:])),
        "bound_holds": all(row["norm"] ** 2 < row["bound"] for row in rows),
        "reports": [rep.to_dict() for rep in result.reports],
        "run": record,
    }
    write_json(out / "sweep_report.json", data)
    return (EXIT_NONCONVERGED if result.aborted else EXIT_OK), data


def cmd_sweep(problem, args, out: Path, record) -> int:
    thr = _threshold(problem, args.seed)
    return _sweep(problem, args, out, record, thr)[0]


def cmd_example5(problem, args, out: Path, record) -> int:
    thr = _threshold(problem, args.seed)
    write_json(out / "threshold.json", {**thr.to_dict(), "run": record})
    warnings = []
    lam = float(problem.declaration.get("lambda", thr.lambda_star / 2))
    if lam >= thr.lambda_star:
        warnings.append("lambda >= lambda_star")
    status, solve = _solve(problem, args, out, record, thr)
    sweep_status = EXIT_OK
    sweep = None
    if "lambdas" in problem.declaration or lam < thr.lambda_star:
        sweep_status, sweep = _sweep(problem, args, out, record, thr)
    summary = {
        "lambda_star": thr.lambda_star,
        "omega_star": thr.omega_star,
        "c_q_estimate": thr.c_q_estimate,
        "caveat": thr.caveat,
        "lambda": lam,
        "solve": {k: solve[k] for k in ("energy", "norm", "relative_residual", "nontrivial", "converged", "verified")},
        "sweep": None if sweep is None else {k: sweep[k] for k in ("strictly_decreasing", "bound_holds", "aborted")},
        "warnings": warnings,
        "run": record,
    }
    write_json(out / "example5.json", summary)
    return max(status, sweep_status)


def montecarlo_weighted_ball(seed: int = 0, n: int = 200_000, cutoff: float = 1.0 - 1e-9) -> dict:
    """Monte Carlo forms of the N = 4 identities alpha dmu = dx (alpha = ((1-|x|^2)/2)^4).

    With h = alpha the sampled values are all equal, so the standard error is 0
    and a rounding floor of 1e-12 relative is added; h = alpha |x|^2 has real variance.
    """
    s2 = lambda x: np.sum(x**2, axis=1)
    alpha = lambda x: ((1.0 - s2(x)) / 2.0) ** 4
    est, err = montecarlo_integral_dmu(alpha, 4, n, cutoff, seed=seed)
    exact = np.pi**2 / 2 * cutoff**4
    est2, err2 = montecarlo_integral_dmu(lambda x: alpha(x) * s2(x), 4, n, cutoff, seed=seed + 1)
    exact2 = np.pi**2 / 3 * cutoff**6
    return {
        "montecarlo_weighted_ball": bool(abs(est - exact) <= 3 * err + 1e-12 * exact),
        "montecarlo_weighted_ball_cutoff_gap": bool(abs(exact - np.pi**2 / 2) <= 1e-8 * np.pi**2 / 2),
        "montecarlo_weighted_second_moment": bool(abs(est2 - exact2) <= 3 * err2),
    }


def cmd_geomcheck(problem, args, out: Path, record) -> int:
    checks = property_checks(seed=args.seed)
    quad = radial_integral(lambda r: (1.0 + np.cosh(r)) ** -4.0, 4)
    checks["unit_ball_volume_quadrature"] = abs(quad - np.pi**2 / 2) <= 1e-8 * np.pi**2 / 2
    for R in (0.5, 1.0, 2.0):
        exact = np.pi * (np.sinh(2 * R) - 2 * R)
        val = radial_integral(lambda r: np.ones_like(r), 3, R_max=R, n_cells=200)
        checks[f"ball_volume_R{R:g}"] = abs(val - exact) <= 1e-8 * exact
    est, err = montecarlo_integral_dmu(lambda x: np.ones(len(x)), 3, 200_000, float(np.tanh(0.5)), seed=args.seed)
    exact = np.pi * (np.sinh(2.0) - 2.0)
    checks["montecarlo_ball_volume"] = abs(est - exact) <= 3 * err
    checks.update(montecarlo_weighted_ball(seed=args.seed))
    checks = {k: bool(v) for k, v in checks.items()}
    write_json(out / "geomcheck.json", {"checks": checks, "all_passed": all(checks.values()), "run": record})
    return EXIT_OK if all(checks.values()) else EXIT_INVALID


HANDLERS = {
    "threshold": cmd_threshold,
    "testfn": cmd_testfn,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "example5": cmd_example5,
    "geomcheck": cmd_geomcheck,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means non-convergence, so usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hypsolve", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--problem", help="JSON problem declaration (defaults to the N=4 example)")
    ap.add_argument("--command", required=True, choices=COMMANDS)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a declaration field (repeatable)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.problem:
            decl = json.loads(Path(args.problem).read_text())
        else:
            decl = example5_declaration()
        decl = apply_overrides(decl, args.set)
        problem = Problem.from_declaration(decl)
        record = _config_record(args, problem.declaration)
        return HANDLERS[args.command](problem, args, out, record)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except RuntimeError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NONCONVERGED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
