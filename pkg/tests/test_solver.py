import numpy as np
import pytest

from hypsolve.functional import J_lambda, energy_gradient, weak_residual
from hypsolve.problem import Problem, example5_declaration
from hypsolve.radial import RadialFunction, abs_power_integral, lebesgue_norm
from hypsolve.solver import (
    SUBLEVEL_MARGIN, SolveConfig, initial_guess, lambda_sweep, minimize_sublevel, nonradial_residuals,
    norm_bound_terms, solve_multistart, verify_weak_solution,
)
from hypsolve.threshold import compute_threshold

from oracles import brute_force_two_plateau, coarse_problem


def problem_with(nl_decl, M=256):
    decl = {**example5_declaration(), "nonlinearity": nl_decl, "grid": {"M": M, "R_max": 10.0, "quad_order": 6}}
    return Problem.from_declaration(decl)


ZERO = {"kind": "table", "samples": [[-1.0, 0.0], [1.0, 0.0]]}
CONST = {"kind": "table", "samples": [[-1.0, 1.0], [1.0, 1.0]]}


def test_config_validation(flagship):
    with pytest.raises(ValueError):
        minimize_sublevel(SolveConfig(lam=0.0, omega_bar=1.0), flagship)
    with pytest.raises(ValueError):
        minimize_sublevel(SolveConfig(lam=-1.0, omega_bar=1.0), flagship)
    with pytest.raises(ValueError):
        SolveConfig(lam=1.0, grad_tol=0.0)
    with pytest.raises(ValueError):
        SolveConfig(lam=1.0, max_iters=0)


def test_zero_nonlinearity_gives_trivial_minimizer():
    p = problem_with(ZERO)
    rep = minimize_sublevel(SolveConfig(lam=3.0, omega_bar=2.0), p)
    assert not rep.minimizer.values.any()
    assert rep.energy == 0.0 and not rep.nontrivial and rep.converged


def test_nonzero_source_gives_nontrivial_minimizer():
    p = problem_with(CONST)
    rep = minimize_sublevel(SolveConfig(lam=0.1, omega_bar=2.0, init={"kind": "zero"}), p)
    assert rep.nontrivial and rep.energy < 0 and rep.converged


def test_flagship_minimizer(flagship, flagship_threshold, flagship_solution):
    rep, t = flagship_solution, flagship_threshold
    assert rep.converged and rep.nontrivial and rep.sublevel_ok
    assert rep.energy < 0
    assert rep.phi < t.omega_star**2 and rep.norm < np.sqrt(2) * t.omega_star
    assert rep.relative_residual <= 1e-8
    assert rep.lambda_star_used == t.lambda_star and not rep.warnings
    h = np.array(rep.history)
    assert np.all(np.diff(h) <= 0)  # monotone descent
    u0 = initial_guess(SolveConfig(lam=rep.lam), flagship, t.omega_star)
    assert rep.energy <= J_lambda(u0, rep.lam, flagship.weight, flagship.nonlinearity)


def test_flagship_criticality_and_bound_chain(flagship, flagship_threshold, flagship_solution):
    t = flagship_threshold
    u, lam = flagship_solution.minimizer, flagship_solution.lam
    norm2, pairing = norm_bound_terms(u, lam, flagship)
    assert abs(norm2 - pairing) <= 1e-8 * norm2  # <J'(u), u> = 0
    a = flagship.weight.on(u.grid)
    # |f(s) s| <= alpha_f (|s| + |s|^q), then Hoelder and the embedding constant
    envelope = lam * t.alpha_f * (abs_power_integral(u, 1.0, a) + abs_power_integral(u, t.q, a))
    holder = lam * t.alpha_f * (t.norm_p * lebesgue_norm(u, t.q) + t.norm_inf * lebesgue_norm(u, t.q) ** t.q)
    assert pairing <= envelope * (1 + 1e-12) and envelope <= holder * (1 + 1e-12)
    assert holder < lam * t.norm_decay_constant(t.omega_star)
    assert lebesgue_norm(u, 3.0) <= t.c_q_estimate * np.sqrt(norm2) * (1 + 1e-9)


def test_flagship_weak_solution(flagship, flagship_solution):
    u, lam = flagship_solution.minimizer, flagship_solution.lam
    assert verify_weak_solution(u, lam, flagship, tol=1e-6)
    assert not verify_weak_solution(u * 1.2, lam, flagship, tol=1e-6)


def test_nonradial_residuals_detect_perturbation(flagship, flagship_solution):
    u, lam = flagship_solution.minimizer, flagship_solution.lam
    good = nonradial_residuals(u, lam, flagship, n_samples=50_000, seed=1)
    bad = nonradial_residuals(u * 1.5, lam, flagship, n_samples=50_000, seed=1)
    assert all(abs(e) <= 3 * s for e, s in good)
    assert all(abs(e) > 3 * s for e, s in bad)


def test_verify_trivial_cases():
    p0 = problem_with(ZERO)
    assert verify_weak_solution(RadialFunction.zeros(p0.grid), 2.0, p0, n_samples=5000)
    p1 = problem_with(CONST)
    assert not verify_weak_solution(RadialFunction.zeros(p1.grid), 2.0, p1, n_samples=5000)


def test_budget_exhaustion_flagged(flagship, flagship_threshold):
    rep = minimize_sublevel(SolveConfig(lam=flagship_threshold.lambda_star / 2, max_iters=1), flagship,
                            flagship_threshold)
    assert not rep.converged and "not converged" in rep.warnings


def test_above_threshold_warns(flagship, flagship_threshold):
    rep = minimize_sublevel(SolveConfig(lam=1.2 * flagship_threshold.lambda_star, max_iters=50), flagship,
                            flagship_threshold)
    assert "lambda >= lambda_star" in rep.warnings


def test_sublevel_projection_keeps_iterates_inside(flagship, flagship_threshold):
    omega_bar = 0.1  # far smaller than the free minimizer's norm: the constraint is active
    rep = minimize_sublevel(SolveConfig(lam=flagship_threshold.lambda_star / 2, omega_bar=omega_bar, max_iters=200),
                            flagship, flagship_threshold)
    assert rep.phi < omega_bar**2
    # the constrained minimizer sits on the boundary; iterates approach it from inside
    assert rep.phi >= omega_bar**2 * (1 - 2 * SUBLEVEL_MARGIN)
    assert rep.converged and rep.on_boundary


def test_boundary_minimizer_satisfies_kkt(flagship, flagship_threshold):
    """Well above the threshold the minimizer is pinned to the sublevel boundary with an outward multiplier."""
    t = flagship_threshold
    lam = 1000.0
    rep = minimize_sublevel(SolveConfig(lam=lam), flagship, t)
    assert rep.converged and rep.on_boundary and rep.sublevel_ok and rep.energy < 0
    u = rep.minimizer
    r, rn = weak_residual(u, lam, flagship.weight, flagship.nonlinearity)
    a = energy_gradient(u)[:-1]
    mu = -(r @ u.values[:-1]) / (a @ u.values[:-1])
    assert mu > 0  # J'(u) = -mu u: energy keeps decreasing outward
    rt = r + mu * a
    tangential = np.sqrt(rt @ u.grid.riesz(np.append(rt, 0.0))[:-1])
    assert tangential <= 1e-8 * rep.norm
    assert rn > 1e-3 * rep.norm  # not a critical point of the unconstrained functional
    assert not verify_weak_solution(u, lam, flagship, n_samples=5000)


def test_brute_force_oracle_coarse_grid():
    p = coarse_problem()
    t = compute_threshold(p, curve_factors=())
    lam = t.lambda_star / 2
    bf_energy, bf_norm, _ = brute_force_two_plateau(p, lam)
    assert bf_energy < 0  # a negative energy well exists in a two-dimensional slice
    rep = minimize_sublevel(SolveConfig(lam=lam), p, t)
    assert rep.converged and rep.energy <= bf_energy


def test_brute_force_decrease_between_extreme_lambdas():
    p = coarse_problem()
    t = compute_threshold(p, curve_factors=())
    n1 = brute_force_two_plateau(p, t.lambda_star / 2)[1]
    n8 = brute_force_two_plateau(p, t.lambda_star / 2**8)[1]
    assert n8 < n1
    sweep = lambda_sweep([t.lambda_star / 2, t.lambda_star / 2**8], p, SolveConfig(lam=1.0), t)
    assert sweep.reports[1].norm < sweep.reports[0].norm


def test_power_scaling_law(flagship, flagship_threshold, flagship_solution):
    """For f = |t|^{-1/2} t the minimizer scales like lambda^2."""
    rep2 = minimize_sublevel(SolveConfig(lam=flagship_solution.lam / 2), flagship, flagship_threshold)
    assert rep2.norm / flagship_solution.norm == pytest.approx(0.25, rel=1e-6)


def test_sweep_single_lambda_matches_direct(flagship, flagship_threshold, flagship_solution):
    res = lambda_sweep([flagship_solution.lam], flagship, SolveConfig(lam=1.0), flagship_threshold)
    assert len(res.reports) == 1 and not res.aborted
    assert res.reports[0].norm == pytest.approx(flagship_solution.norm, rel=1e-12)


def test_sweep_zero_nonlinearity():
    res = lambda_sweep([2.0, 1.0, 0.5], problem_with(ZERO), SolveConfig(lam=1.0, omega_bar=2.0))
    assert [r.norm for r in res.reports] == [0.0, 0.0, 0.0]


def test_sweep_validation(flagship, flagship_threshold):
    cfg = SolveConfig(lam=1.0)
    for bad in ([1.0, 2.0], [1.0, 1.0], [], [1.0, -1.0], [2 * flagship_threshold.lambda_star, 1.0]):
        with pytest.raises(ValueError):
            lambda_sweep(bad, flagship, cfg, flagship_threshold)


def test_sweep_aborts_on_nonconvergence(flagship, flagship_threshold):
    lams = [flagship_threshold.lambda_star / 2**k for k in (1, 2, 3)]
    res = lambda_sweep(lams, flagship, SolveConfig(lam=1.0, max_iters=1), flagship_threshold)
    assert res.aborted and len(res.reports) == 1


def test_sweep_csv(tmp_path, flagship, flagship_threshold):
    lams = [flagship_threshold.lambda_star / 2**k for k in (1, 2)]
    res = lambda_sweep(lams, flagship, SolveConfig(lam=1.0), flagship_threshold)
    res.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "lambda,norm,energy,residual,converged" and len(lines) == 3


def test_multistart_keeps_lowest(flagship, flagship_threshold):
    lam = flagship_threshold.lambda_star / 2
    rep = solve_multistart(SolveConfig(lam=lam), flagship, [(2.0, 1.0), (4.0, 1.0)], flagship_threshold)
    singles = [minimize_sublevel(SolveConfig(lam=lam, init={"kind": "scaled_plateau", "rho": rho, "r": r}),
                                 flagship, flagship_threshold).energy for rho, r in [(2.0, 1.0), (4.0, 1.0)]]
    assert rep.energy == min(singles)
    assert len(rep.alternatives) == 1


def test_report_serialization(flagship_solution):
    d = flagship_solution.to_dict()
    for key in ("energy", "phi", "residual_norm", "nontrivial", "sublevel_ok", "iterations", "lambda_star_used",
                "config"):
        assert key in d
    assert "minimizer" not in d
