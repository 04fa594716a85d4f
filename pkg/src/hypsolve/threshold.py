"""Explicit constants of the existence argument: c_q, h, lambda*, Theta and its majorant."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from hypsolve.functional import Psi, golden_section_max, psi_gradient
from hypsolve.radial import RadialFunction, RadialGrid, abs_power_integral, critical_exponent, dirichlet_energy

CQ_CAVEAT = "c_q: discrete radial estimate"


@dataclass
class SobolevEstimate:
    value: float
    nu: float
    converged: bool
    iterations: int
    M: int
    R_max: float
    quad_order: int
    seed: int
    n_starts: int
    start_values: list = field(default_factory=list)


def sobolev_quotient(u: RadialFunction, nu: float) -> float:
    """||u||_{L^nu(dmu)} / ||u||."""
    return abs_power_integral(u, nu) ** (1.0 / nu) / np.sqrt(dirichlet_energy(u))


def _random_bumps(grid: RadialGrid, rng: np.random.Generator, center_max: float, n_bumps: int = 3) -> RadialFunction:
    x = grid.nodes
    v = np.zeros_like(x)
    for _ in range(n_bumps):
        m = rng.uniform(0.0, center_max)
        s = rng.uniform(0.2, 1.5)
        v += rng.uniform(0.2, 1.0) * np.exp(-(((x - m) / s) ** 2))
    v[-1] = 0.0
    return RadialFunction(grid, v)


def _normalize(u: RadialFunction, radius: float = 1.0) -> RadialFunction:
    return u * (radius / np.sqrt(dirichlet_energy(u)))


def estimate_sobolev_constant(
    grid: RadialGrid,
    nu: float,
    n_starts: int = 10,
    seed: int = 0,
    max_iter: int = 3000,
    tol: float = 1e-14,
) -> SobolevEstimate:
    """Largest ||u||_nu / ||u|| over the discrete radial space, from several random starts.

    Each start runs the normalized gradient-ascent map u <- R(|u|^{nu-2}u) / ||.||
    (R the Riesz map), which increases the quotient monotonically because
    ||u||_nu^nu is convex.
    """
    if not 2.0 < nu < critical_exponent(grid.dim):
        raise ValueError(f"nu={nu} must lie strictly inside (2, 2N/(N-2))")
    rng = np.random.default_rng(seed)
    best, best_conv, total_iters, starts = 0.0, False, 0, []
    for _ in range(n_starts):
        u = _normalize(_random_bumps(grid, rng, min(3.0, 0.5 * grid.R_max)))
        G = abs_power_integral(u, nu)
        conv = False
        for it in range(max_iter):
            uq = u.at_quadrature()
            v = RadialFunction(grid, grid.riesz(grid.load(np.abs(uq) ** (nu - 2.0) * uq)))
            v = _normalize(v)
            Gv = abs_power_integral(v, nu)
            done = abs(Gv - G) <= tol * G
            u, G = v, max(G, Gv)
            if done:
                conv = True
                break
        total_iters += it + 1
        val = G ** (1.0 / nu)
        starts.append(val)
        if val > best:
            best, best_conv = val, conv
    return SobolevEstimate(best, nu, best_conv, total_iters, grid.M, grid.R_max, grid.quad_order, seed, n_starts, starts)


def _h_coefficients(q, norm_p, norm_inf, c_q):
    A = q * np.sqrt(2.0) * norm_p
    B = 2.0 ** (q / 2.0) * c_q ** (q - 1.0) * norm_inf
    return A, B


def h_of_omega(omega, q, norm_p, norm_inf, c_q):
    """h(w) = w / (q sqrt2 ||alpha||_p + 2^{q/2} c_q^{q-1} ||alpha||_inf w^{q-1})."""
    A, B = _h_coefficients(q, norm_p, norm_inf, c_q)
    omega = np.asarray(omega, dtype=float)
    return omega / (A + B * omega ** (q - 1.0))


def _h_greater(A, B, q):
    """Comparator h(a) > h(b) free of the cancellation in h(a) - h(b)."""
    m = q - 2.0

    def greater(a, b):
        if a == b:
            return False
        sign = 1.0
        if a < b:
            a, b, sign = b, a, -1.0
        d = a - b
        # (a^m - b^m)/(a - b) through expm1/log1p
        quot = b**m * np.expm1(m * np.log1p(d / b)) / d
        diff = A - B * a * b * quot
        return bool(sign * diff > 0)

    return greater


def golden_section_argmax_h(q, norm_p, norm_inf, c_q) -> float:
    """Maximizer of h by golden-section search in log(omega); no use of the first-order condition."""
    A, B = _h_coefficients(q, norm_p, norm_inf, c_q)
    greater = _h_greater(A, B, q)
    lo, hi = -60.0, 60.0
    s = golden_section_max(lambda x, y: greater(np.exp(x), np.exp(y)), lo, hi, xtol=0.0, atol=1e-15)
    return float(np.exp(s))


def maximize_h(q, norm_p, norm_inf, c_q, crosscheck: bool = True):
    """(omega*, h(omega*)) from the closed form omega* = (A / (B (q-2)))^{1/(q-1)}."""
    if q <= 2:
        raise ValueError("q must exceed 2; h has no interior maximum otherwise")
    A, B = _h_coefficients(q, norm_p, norm_inf, c_q)
    omega = (A / (B * (q - 2.0))) ** (1.0 / (q - 1.0))
    if crosscheck:
        gs = golden_section_argmax_h(q, norm_p, norm_inf, c_q)
        if abs(gs - omega) > 1e-8 * omega:
            raise RuntimeError(f"closed-form maximizer {omega!r} disagrees with golden-section {gs!r}")
    return float(omega), float(h_of_omega(omega, q, norm_p, norm_inf, c_q))


def lambda_star(q, alpha_f, c_q, h_max) -> float:
    if alpha_f <= 0:
        raise ValueError("alpha_f = 0: f vanishes and only the trivial solution exists")
    return float(q * h_max / (alpha_f * c_q))


def lambda_star_at(omega, q, alpha_f, c_q, norm_p, norm_inf):
    """The omega-resolved threshold q h(omega) / (alpha_f c_q)."""
    return lambda_star(q, alpha_f, c_q, h_of_omega(omega, q, norm_p, norm_inf, c_q))


def theta_majorant(r, alpha_f, c_q, norm_p, norm_inf, q):
    """alpha_f c_q (||alpha||_p sqrt(2/r) + 2^{q/2} c_q^{q-1} ||alpha||_inf r^{q/2-1} / q)."""
    r = np.asarray(r, dtype=float)
    return alpha_f * c_q * (
        norm_p * np.sqrt(2.0 / r) + 2.0 ** (q / 2.0) * c_q ** (q - 1.0) / q * norm_inf * r ** (q / 2.0 - 1.0)
    )


def norm_decay_constant(omega, q, alpha_f, c_q, norm_p, norm_inf) -> float:
    """M_omega = c_q alpha_f (sqrt2 ||alpha||_p omega + 2^{q/2} c_q^{q-1} ||alpha||_inf omega^q)."""
    return float(
        c_q * alpha_f * (np.sqrt(2.0) * norm_p * omega + 2.0 ** (q / 2.0) * c_q ** (q - 1.0) * norm_inf * omega**q)
    )


def theta_sample(r: float, problem, n_candidates: int = 6, seed: int = 0, max_iter: int = 400) -> float:
    """Lower bound for Theta(r) = sup{Psi(u) : Phi(u) < r} / r.

    Candidates are random nonnegative bump combinations placed where alpha is
    large, pushed to Phi = r(1 - 1e-6) and improved by projected ascent on Psi.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    grid, alpha, nl = problem.grid, problem.weight, problem.nonlinearity
    radius = np.sqrt(2.0 * r * (1.0 - 1e-6))
    a = alpha(grid.nodes)
    support = grid.nodes[a >= 1e-3 * a.max()]
    center_max = float(min(support.max(), grid.R_max * 0.5)) if support.size else grid.R_max * 0.5
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_candidates):
        u = _normalize(_random_bumps(grid, rng, max(center_max, 0.5)), radius)
        val = Psi(u, alpha, nl)
        for _ in range(max_iter):
            g = grid.riesz(psi_gradient(u, alpha, nl))
            if not np.any(g):
                break
            step, improved = 1.0, False
            direction = RadialFunction(grid, g)
            gnorm = np.sqrt(dirichlet_energy(direction))
            unorm = radius
            while step > 1e-6:
                cand = u * (1.0 - step) + direction * (step * unorm / gnorm)
                if dirichlet_energy(cand) == 0:
                    step *= 0.5
                    continue
                cand = _normalize(cand, radius)
                cv = Psi(cand, alpha, nl)
                if cv > val:
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
            rel = (cv - val) / max(abs(cv), 1e-300)
            u, val = cand, cv
            if rel < 1e-13:
                break
        best = max(best, val)
    return float(best / r)


@dataclass
class ThresholdReport:
    c_q_estimate: float
    omega_star: float
    h_max: float
    lambda_star: float
    p: float
    q: float
    alpha_f: float
    norm_p: float
    norm_inf: float
    norm_1: float
    bound_curve: list
    sobolev: dict
    caveat: str = CQ_CAVEAT
    seed: int = 0
    grid: dict = field(default_factory=dict)
    declaration: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def lambda_star_at(self, omega):
        return lambda_star_at(omega, self.q, self.alpha_f, self.c_q_estimate, self.norm_p, self.norm_inf)

    def majorant(self, r):
        return theta_majorant(r, self.alpha_f, self.c_q_estimate, self.norm_p, self.norm_inf, self.q)

    def norm_decay_constant(self, omega=None):
        omega = self.omega_star if omega is None else omega
        return norm_decay_constant(omega, self.q, self.alpha_f, self.c_q_estimate, self.norm_p, self.norm_inf)


def compute_threshold(problem, seed: int = 0, n_starts: int = 10, curve_factors=(0.01, 0.1, 1.0, 10.0),
                      n_candidates: int = 4) -> ThresholdReport:
    q = problem.q
    est = estimate_sobolev_constant(problem.grid, q, n_starts=n_starts, seed=seed)
    c_q = est.value
    w = problem.weight
    norm_p, norm_inf = w.norm(problem.p), w.norm_inf
    omega, hmax = maximize_h(q, norm_p, norm_inf, c_q)
    alpha_f = problem.nonlinearity.alpha_f
    lam = lambda_star(q, alpha_f, c_q, hmax)
    curve = []
    for k, factor in enumerate(curve_factors):
        r = factor * omega**2
        sample = theta_sample(r, problem, n_candidates=n_candidates, seed=seed + k)
        curve.append([r, sample, float(theta_majorant(r, alpha_f, c_q, norm_p, norm_inf, q))])
    return ThresholdReport(
        c_q_estimate=c_q,
        omega_star=omega,
        h_max=hmax,
        lambda_star=lam,
        p=problem.p,
        q=q,
        alpha_f=alpha_f,
        norm_p=norm_p,
        norm_inf=norm_inf,
        norm_1=w.norm(1.0),
        bound_curve=curve,
        sobolev=asdict(est),
        seed=seed,
        grid=problem.grid.metadata(),
        declaration=problem.declaration,
    )
