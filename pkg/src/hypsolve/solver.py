"""Local minimization of J_lambda on the sublevel Phi < omega_bar^2 and the lambda sweep."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from hypsolve.functional import J_lambda, Phi, Psi, energy_change, energy_gradient, psi_gradient, weak_residual
from hypsolve.geometry import conformal_factor, montecarlo_integral_dmu
from hypsolve.radial import RadialFunction, dirichlet_energy
from hypsolve.testfn import plateau_profile

log = logging.getLogger(__name__)

SUBLEVEL_MARGIN = 1e-6
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5


@dataclass
class SolveConfig:
    lam: float
    omega_bar: float | None = None
    max_iters: int = 2000
    grad_tol: float = 1e-8
    init: dict = field(default_factory=lambda: {"kind": "scaled_plateau"})

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolveReport:
    minimizer: RadialFunction
    energy: float
    phi: float
    norm: float
    residual_norm: float
    nontrivial: bool
    sublevel_ok: bool
    iterations: int
    converged: bool
    lambda_star_used: float
    lam: float
    omega_bar: float
    on_boundary: bool = False
    history: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    alternatives: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / self.norm if self.norm > 0 else float("inf") * self.residual_norm

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "omega_bar": self.omega_bar,
            "lambda_star_used": self.lambda_star_used,
            "energy": self.energy,
            "phi": self.phi,
            "norm": self.norm,
            "residual_norm": self.residual_norm,
            "relative_residual": self.relative_residual if self.norm > 0 else None,
            "nontrivial": self.nontrivial,
            "sublevel_ok": self.sublevel_ok,
            "iterations": self.iterations,
            "converged": self.converged,
            "on_boundary": self.on_boundary,
            "warnings": list(self.warnings),
            "alternatives": list(self.alternatives),
            "config": self.config,
        }


def _norm(u: RadialFunction) -> float:
    return float(np.sqrt(dirichlet_energy(u)))


def _project(u: RadialFunction, omega_bar: float) -> RadialFunction:
    """Radial rescaling back inside Phi < omega_bar^2 (Phi is quadratic)."""
    if Phi(u) < omega_bar**2:
        return u
    return u * (omega_bar * np.sqrt(2.0 * (1.0 - SUBLEVEL_MARGIN)) / _norm(u))


def _best_on_ray(w: RadialFunction, lam, problem, omega_bar, ts=None):
    """Scale t minimizing J_lambda(t w) over a log-spaced scan within the sublevel."""
    if ts is None:
        ts = np.logspace(-8, 4, 241)
    phi_w = Phi(w)
    best_t, best_J = None, 0.0
    for t in ts:
        if t * t * phi_w >= omega_bar**2 * (1.0 - SUBLEVEL_MARGIN):
            break
        J = J_lambda(w * t, lam, problem.weight, problem.nonlinearity)
        if J < best_J:
            best_t, best_J = float(t), J
    return best_t, best_J


def initial_guess(cfg: SolveConfig, problem, omega_bar: float) -> RadialFunction:
    grid = problem.grid
    kind = cfg.init.get("kind", "scaled_plateau")
    if kind == "zero":
        return RadialFunction.zeros(grid)
    if kind == "custom":
        start = cfg.init["function"]
        if not isinstance(start, RadialFunction):
            start = RadialFunction(grid, np.asarray(start, dtype=float))
        return _project(RadialFunction(grid, start.values), omega_bar)
    if kind == "scaled_plateau":
        rho, r = cfg.init.get("rho"), cfg.init.get("r")
        if rho is None:
            rho, r = problem.plateau
        w = RadialFunction.from_profile(grid, lambda x: plateau_profile(x, rho, r))
        t, _ = _best_on_ray(w, cfg.lam, problem, omega_bar)
        if t is None:
            log.info("no negative-energy point on the plateau ray; starting from zero")
            return RadialFunction.zeros(grid)
        return w * t
    raise ValueError(f"unknown init kind {kind!r}")


def _converged(rn: float, norm: float, grad_tol: float, omega_bar: float) -> bool:
    if rn <= grad_tol * norm:
        return True
    return norm <= 10.0 * grad_tol * omega_bar and rn <= grad_tol * (1.0 + norm)


def _on_boundary(u: RadialFunction, omega_bar: float) -> bool:
    return Phi(u) >= omega_bar**2 * (1.0 - 2.0 * SUBLEVEL_MARGIN)


def _tangential_residual(r: np.ndarray, u: RadialFunction):
    """(<r, u>, tangential dual residual, its dual norm) on the sphere ||v|| = ||u||.

    The radial part of r along the dual vector of u is removed componentwise,
    which avoids the cancellation of sqrt(||r||^2 - <r, u>^2 / ||u||^2).
    """
    a = energy_gradient(u)[:-1]
    norm2 = float(a @ u.values[:-1])
    radial = float(r @ u.values[:-1])
    rt = r - (radial / norm2) * a
    g = u.grid.riesz(np.append(rt, 0.0))[:-1]
    return radial, rt, float(np.sqrt(max(rt @ g, 0.0)))


def _boundary_stationary(radial: float, tangential: float, u: RadialFunction, grad_tol: float) -> bool:
    """KKT test on the sublevel boundary: J decreases outward and the tangential residual is small."""
    return radial < 0 and tangential <= grad_tol * _norm(u)


def minimize_sublevel(cfg: SolveConfig, problem, threshold=None) -> SolveReport:
    """Preconditioned gradient descent on J_lambda restricted to Phi < omega_bar^2.

    The search direction is the Riesz representative of the residual in the
    energy inner product; steps use Armijo backtracking, and iterates leaving
    the sublevel are rescaled back radially.
    """
    if not cfg.lam > 0:
        raise ValueError("lambda must be positive")
    if threshold is None and cfg.omega_bar is None:
        from hypsolve.threshold import compute_threshold

        threshold = compute_threshold(problem, curve_factors=())
    lam_star = threshold.lambda_star if threshold is not None else float("nan")
    omega_bar = cfg.omega_bar if cfg.omega_bar is not None else threshold.omega_star
    warns = []
    if threshold is not None and cfg.lam >= lam_star:
        warns.append("lambda >= lambda_star")
        log.warning("lambda=%g is not below lambda_star=%g; no existence guarantee", cfg.lam, lam_star)

    grid, alpha, nl = problem.grid, problem.weight, problem.nonlinearity
    u = initial_guess(cfg, problem, omega_bar)
    J = J_lambda(u, cfg.lam, alpha, nl)
    history = [J]
    converged = on_boundary = False
    tau = 1.0
    it = 0
    for it in range(cfg.max_iters + 1):
        r, rn = weak_residual(u, cfg.lam, alpha, nl)
        norm = _norm(u)
        if _converged(rn, norm, cfg.grad_tol, omega_bar):
            converged = True
            break
        search, sphere = r, None
        if _on_boundary(u, omega_bar):
            radial, rt, tn = _tangential_residual(r, u)
            if _boundary_stationary(radial, tn, u, cfg.grad_tol):
                converged = on_boundary = True
                break
            if radial < 0:
                # J decreases outward: slide along the sphere ||v|| = ||u|| (inside the sublevel)
                search, sphere = rt, norm
        if it == cfg.max_iters:
            break
        g = grid.riesz(np.append(search, 0.0))
        tau = min(1.0, 2.0 * tau)
        accepted = False
        if sphere is not None:
            ug = float(energy_gradient(u) @ g)  # <u, g> in the energy inner product (~0: g is tangential)
            gg = float(np.append(search, 0.0) @ g)  # ||g||^2
        while tau > 1e-14:
            if sphere is None:
                cand = _project(RadialFunction(grid, u.values - tau * g), omega_bar)
                d = cand - u
            else:
                # u - tau g rescaled to ||u||, written as an increment without cancellation
                shrink = np.expm1(-0.5 * np.log1p((tau * tau * gg - 2.0 * tau * ug) / sphere**2))
                d = RadialFunction(grid, -tau * g + shrink * (u.values - tau * g))
                cand = u + d
                if Phi(cand) >= omega_bar**2:  # rounding drift across the boundary
                    cand = _project(cand, omega_bar)
                    d = cand - u
            dJ = energy_change(u, d, cfg.lam, alpha, nl)
            if dJ <= ARMIJO_C * float(r @ d.values[:-1]):
                accepted = True
                break
            tau *= ARMIJO_SHRINK
        if not accepted:
            log.info("line search stalled at iteration %d (residual %.3e)", it, rn)
            break
        u = cand
        J = J_lambda(u, cfg.lam, alpha, nl)
        history.append(J)
    r, rn = weak_residual(u, cfg.lam, alpha, nl)
    norm = _norm(u)
    phi = Phi(u)
    if not converged:
        warns.append("not converged")
    if on_boundary:
        warns.append("minimizer on the sublevel boundary: constrained minimum, not a critical point")
    return SolveReport(
        minimizer=u,
        energy=J_lambda(u, cfg.lam, alpha, nl),
        phi=phi,
        norm=norm,
        residual_norm=rn,
        nontrivial=bool(norm > 10.0 * cfg.grad_tol * omega_bar),
        sublevel_ok=bool(phi < omega_bar**2),
        iterations=it,
        converged=converged,
        lambda_star_used=lam_star,
        on_boundary=on_boundary,
        lam=cfg.lam,
        omega_bar=omega_bar,
        history=history,
        warnings=warns,
        config={
            "lambda": cfg.lam,
            "omega_bar": omega_bar,
            "max_iters": cfg.max_iters,
            "grad_tol": cfg.grad_tol,
            "init": {k: v for k, v in cfg.init.items() if k != "function"},
            "grid": grid.metadata(),
            "declaration": problem.declaration,
        },
    )


def solve_multistart(cfg: SolveConfig, problem, plateaus, threshold=None) -> SolveReport:
    """Run one solve per (rho, r) plateau start; keep the lowest energy and log the others."""
    reports = [
        minimize_sublevel(replace(cfg, init={"kind": "scaled_plateau", "rho": rho, "r": r}), problem, threshold)
        for rho, r in plateaus
    ]
    reports.sort(key=lambda rep: rep.energy)
    best = reports[0]
    best.alternatives = [{"energy": rep.energy, "norm": rep.norm, "init": rep.config["init"]} for rep in reports[1:]]
    return best


@dataclass
class SweepResult:
    reports: list
    aborted: bool
    norm_decay_constant: float

    def rows(self):
        for rep in self.reports:
            yield {
                "lambda": rep.lam,
                "norm": rep.norm,
                "energy": rep.energy,
                "residual": rep.residual_norm,
                "converged": rep.converged,
                "bound": rep.lam * self.norm_decay_constant,
            }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "norm", "energy", "residual", "converged"])
            for row in self.rows():
                w.writerow([f"{row['lambda']:.17g}", f"{row['norm']:.17g}", f"{row['energy']:.17g}",
                            f"{row['residual']:.17g}", str(row["converged"]).lower()])


def lambda_sweep(lambdas, problem, cfg_template: SolveConfig, threshold=None) -> SweepResult:
    """Solve for each lambda in a strictly decreasing list, warm starting from the previous minimizer."""
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    if any(x <= 0 for x in lambdas):
        raise ValueError("lambdas must be positive")
    if threshold is None and cfg_template.omega_bar is None:
        from hypsolve.threshold import compute_threshold

        threshold = compute_threshold(problem, curve_factors=())
    if threshold is not None and lambdas[0] >= threshold.lambda_star:
        raise ValueError(f"lambdas must lie below lambda_star={threshold.lambda_star:g}")
    omega_bar = cfg_template.omega_bar if cfg_template.omega_bar is not None else threshold.omega_star
    if threshold is not None:
        decay = threshold.norm_decay_constant(omega_bar)
    else:  # no threshold supplied: the bound is only known when f vanishes under the growth envelope
        decay = 0.0 if problem.nonlinearity.alpha_f == 0 else float("nan")
    reports, prev, aborted = [], None, False
    for lam in lambdas:
        init = cfg_template.init if prev is None else {"kind": "custom", "function": prev}
        rep = minimize_sublevel(replace(cfg_template, lam=lam, omega_bar=omega_bar, init=init), problem, threshold)
        reports.append(rep)
        if not rep.converged:
            log.error("sweep aborted: lambda=%g did not converge", lam)
            aborted = True
            break
        prev = rep.minimizer
    return SweepResult(reports, aborted, decay)


def _angular_fields(dim: int):
    """Non-constant polynomials with zero spherical mean, with Euclidean gradients."""

    def grad(*parts):
        def g(x):
            out = np.zeros_like(x)
            for i, fn in parts:
                out[:, i] = fn(x)
            return out

        return g

    return [
        (lambda x: x[:, 0], grad((0, lambda x: np.ones(len(x))))),
        (lambda x: x[:, 0] * x[:, 1], grad((0, lambda x: x[:, 1]), (1, lambda x: x[:, 0]))),
        (lambda x: x[:, 0] ** 2 - x[:, 1] ** 2, grad((0, lambda x: 2 * x[:, 0]), (1, lambda x: -2 * x[:, 1]))),
        (lambda x: x[:, 0] * x[:, 1] * x[:, 2],
         grad((0, lambda x: x[:, 1] * x[:, 2]), (1, lambda x: x[:, 0] * x[:, 2]), (2, lambda x: x[:, 0] * x[:, 1]))),
        (lambda x: x[:, 2] - 2.0 * x[:, 0] * x[:, 1],
         grad((0, lambda x: -2 * x[:, 1]), (1, lambda x: -2 * x[:, 0]), (2, lambda x: np.ones(len(x))))),
    ]


def nonradial_residuals(u: RadialFunction, lam: float, problem, n_samples: int = 50_000, seed: int = 0,
                        annulus=None):
    """Monte Carlo estimates of the weak residual against psi(rho) (1 + Y(x)) for five angular Y.

    psi is the nodal interpolant of a plateau, so its radial part lies in the
    discrete space; Y has zero spherical mean.  Returns [(estimate, stderr), ...].
    """
    grid, alpha, nl = u.grid, problem.weight, problem.nonlinearity
    rho0, r0 = annulus if annulus is not None else problem.plateau
    psi = RadialFunction.from_profile(grid, lambda x: plateau_profile(x, rho0, r0))
    outer = min(rho0 + r0 + 2 * np.max(grid.widths), grid.R_max)
    cutoff = float(np.tanh(0.5 * outer))
    out = []
    for k, (Y, gradY) in enumerate(_angular_fields(grid.dim)):

        def integrand(pts, Y=Y, gradY=gradY):
            s = np.linalg.norm(pts, axis=1)
            s_safe = np.where(s > 0, s, 1.0)
            rho = 2.0 * np.arctanh(s)
            radial_dir = pts / s_safe[:, None]
            du, dpsi = u.derivative(rho), psi.derivative(rho)
            uval, pval = u(rho), psi(rho)
            y = Y(pts)
            ang = np.sum(radial_dir * gradY(pts), axis=1)
            grad_term = du * dpsi * (1.0 + y) + du * pval * conformal_factor(s) * ang
            load_term = lam * alpha(rho) * np.asarray(nl.f(uval), dtype=float) * pval * (1.0 + y)
            return grad_term - load_term

        out.append(montecarlo_integral_dmu(integrand, grid.dim, n_samples, cutoff, seed=seed + k))
    return out


def verify_weak_solution(u: RadialFunction, lam: float, problem, tol: float = 1e-6, n_samples: int = 50_000,
                         seed: int = 0) -> bool:
    """Radial residual within tol (1 + ||u||) and Monte Carlo residuals against non-radial fields within 3 stderr."""
    _, rn = weak_residual(u, lam, problem.weight, problem.nonlinearity)
    if not rn <= tol * (1.0 + _norm(u)):
        return False
    for est, err in nonradial_residuals(u, lam, problem, n_samples, seed):
        if abs(est) > 3.0 * err:
            return False
    return True


def norm_bound_terms(u: RadialFunction, lam: float, problem) -> tuple[float, float]:
    """(||u||^2, lambda <Psi'(u), u>): equal at a critical point."""
    return dirichlet_energy(u), lam * float(psi_gradient(u, problem.weight, problem.nonlinearity) @ u.values)
