import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from hypsolve.problem import Problem, example5_declaration
from hypsolve.radial import RadialFunction, RadialGrid, dirichlet_energy, lebesgue_norm
from hypsolve.threshold import (
    CQ_CAVEAT, estimate_sobolev_constant, golden_section_argmax_h, h_of_omega, lambda_star, lambda_star_at,
    maximize_h, norm_decay_constant, sobolev_quotient, theta_majorant, theta_sample,
)


def coeffs_to_norms(A, B, q, c_q=1.0):
    """(norm_p, norm_inf) producing the requested A = q sqrt2 |a|_p and B = 2^{q/2} c^{q-1} |a|_inf."""
    return A / (q * np.sqrt(2)), B / (2 ** (q / 2) * c_q ** (q - 1))


# --- h and its maximizer ---------------------------------------------------------------

def test_h_unit_coefficients():
    npn, nin = coeffs_to_norms(1.0, 1.0, 3.0)
    assert h_of_omega(1.0, 3.0, npn, nin, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert h_of_omega(1e-9, 3.0, npn, nin, 1.0) == pytest.approx(1e-9, rel=1e-6)


@pytest.mark.parametrize("A,B,q,w_star,h_max", [(1.0, 1.0, 3.0, 1.0, 0.5), (2.0, 1.0, 4.0, 1.0, 1 / 3)])
def test_maximize_h_hand_cases(A, B, q, w_star, h_max):
    w, h = maximize_h(q, *coeffs_to_norms(A, B, q), 1.0)
    assert w == pytest.approx(w_star, rel=1e-12)
    assert h == pytest.approx(h_max, rel=1e-12)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(2.05, 5.5))
def test_closed_form_maximizer_matches_golden_section(A, B, q):
    npn, nin = coeffs_to_norms(A, B, q)
    w, h = maximize_h(q, npn, nin, 1.0, crosscheck=False)
    assert w == pytest.approx((A / (B * (q - 2))) ** (1 / (q - 1)), rel=1e-12)
    assert golden_section_argmax_h(q, npn, nin, 1.0) == pytest.approx(w, rel=1e-8)
    # unimodality on either side of the maximizer
    lo, hi = np.sort(np.random.default_rng(0).uniform(0, w, 2))
    assert h_of_omega(lo, q, npn, nin, 1.0) < h_of_omega(hi, q, npn, nin, 1.0) <= h
    assert h_of_omega(2 * w, q, npn, nin, 1.0) < h and h_of_omega(w / 2, q, npn, nin, 1.0) < h


def test_doubling_coefficients():
    q = 3.0
    w1, h1 = maximize_h(q, *coeffs_to_norms(1.3, 0.7, q), 1.0)
    w2, h2 = maximize_h(q, *coeffs_to_norms(2.6, 1.4, q), 1.0)
    assert h2 == pytest.approx(h1 / 2, rel=1e-12)
    assert w2 == pytest.approx(w1, rel=1e-12)


def test_maximize_h_rejects_q_le_2():
    with pytest.raises(ValueError):
        maximize_h(2.0, 1.0, 1.0, 1.0)


# --- lambda* ---------------------------------------------------------------------------

def test_lambda_star_arithmetic():
    assert lambda_star(3.0, 1.0, 1.0, 0.5) == pytest.approx(1.5, rel=1e-15)
    with pytest.raises(ValueError):
        lambda_star(3.0, 0.0, 1.0, 0.5)


def test_lambda_star_curve_peaks_at_maximizer():
    q, af, c, npn, nin = 3.0, 0.57, 0.26, 0.35, 0.0625
    w, h = maximize_h(q, npn, nin, c)
    top = lambda_star(q, af, c, h)
    assert lambda_star_at(w, q, af, c, npn, nin) == pytest.approx(top, rel=1e-12)
    for om in np.geomspace(1e-3, 1e3, 50):
        assert lambda_star_at(om, q, af, c, npn, nin) <= top * (1 + 1e-14)


def test_lambda_star_decreases_with_c_q():
    q, af, npn, nin = 3.0, 0.57, 0.35, 0.0625
    vals = [lambda_star(q, af, c, maximize_h(q, npn, nin, c)[1]) for c in (0.2, 0.4)]
    assert vals[1] < vals[0]


# --- Theta majorant ---------------------------------------------------------------------

def test_majorant_identity_symbolic():
    w, q, af, c, P, I = sp.symbols("omega q alpha_f c_q P I", positive=True)
    h = w / (q * sp.sqrt(2) * P + 2 ** (q / 2) * c ** (q - 1) * I * w ** (q - 1))
    lam_w = q * h / (af * c)
    r = w**2
    maj = af * c * (P * sp.sqrt(2 / r) + 2 ** (q / 2) * c ** (q - 1) / q * I * r ** (q / 2 - 1))
    assert sp.simplify(sp.powsimp(sp.expand(lam_w * maj), force=True) - 1) == 0


def test_majorant_identity_numeric():
    rng = np.random.default_rng(0)
    q, af, c, npn, nin = 3.0, 0.569877, 0.26168, 0.34837, 0.0625
    for om in rng.uniform(0.01, 100, 100):
        prod = lambda_star_at(om, q, af, c, npn, nin) * theta_majorant(om**2, af, c, npn, nin, q)
        assert prod == pytest.approx(1.0, abs=1e-12)


def test_majorant_limits():
    args = (0.57, 0.26, 0.35, 0.0625, 3.0)
    big = [theta_majorant(r, *args) for r in (1e8, 4e8)]
    assert big[1] / big[0] == pytest.approx(2.0, rel=1e-3)
    small = [theta_majorant(r, *args) for r in (1e-8, 4e-8)]
    assert small[0] / small[1] == pytest.approx(2.0, rel=1e-3)


def test_norm_decay_constant_closed_form():
    q, af, c, npn, nin, om = 3.0, 0.57, 0.26, 0.35, 0.0625, 11.0
    expected = c * af * (np.sqrt(2) * npn * om + 2 ** 1.5 * c**2 * nin * om**3)
    assert norm_decay_constant(om, q, af, c, npn, nin) == pytest.approx(expected, rel=1e-14)


# --- Sobolev constant ---------------------------------------------------------------------

def test_sobolev_quotient_scale_invariant():
    g = RadialGrid.uniform(3, M=256, R_max=8.0)
    u = RadialFunction.from_profile(g, lambda r: np.exp(-r) * (1 + np.sin(3 * r)))
    assert sobolev_quotient(u * 5.0, 4.0) == pytest.approx(sobolev_quotient(u, 4.0), rel=1e-13)


def test_sobolev_estimate_grows_under_refinement():
    a = estimate_sobolev_constant(RadialGrid.uniform(3, M=512, R_max=10.0), 4.0, seed=0)
    b = estimate_sobolev_constant(RadialGrid.uniform(3, M=1024, R_max=10.0), 4.0, seed=0)
    assert a.value <= b.value + 1e-10
    assert (a.M, a.R_max) == (512, 10.0)


def test_sobolev_estimate_reproducible_across_seeds():
    g = RadialGrid.uniform(3, M=2048, R_max=10.0)
    vals = [estimate_sobolev_constant(g, 4.0, seed=s).value for s in (0, 1, 2)]
    assert vals[0] > 0
    assert max(vals) - min(vals) <= 1e-4 * max(vals)


def test_sobolev_rejects_endpoint():
    g = RadialGrid.uniform(3, M=64, R_max=8.0)
    for nu in (2.0, 6.0):
        with pytest.raises(ValueError):
            estimate_sobolev_constant(g, nu)


def test_sobolev_bound_holds_for_sampled_functions(flagship, flagship_threshold):
    c = flagship_threshold.c_q_estimate
    rng = np.random.default_rng(4)
    for _ in range(20):
        cen, wid = rng.uniform(0.2, 6), rng.uniform(0.1, 2)
        u = RadialFunction.from_profile(flagship.grid, lambda r: np.exp(-(((r - cen) / wid) ** 2)))
        assert lebesgue_norm(u, 3.0) <= c * np.sqrt(dirichlet_energy(u)) * (1 + 1e-9)


# --- Theta sample / report ---------------------------------------------------------------------

def zero_problem():
    decl = example5_declaration()
    decl["nonlinearity"] = {"kind": "table", "samples": [[-1.0, 0.0], [1.0, 0.0]]}
    decl["grid"] = {"M": 256, "R_max": 10.0, "quad_order": 6}
    return Problem.from_declaration(decl)


def test_theta_sample_zero_nonlinearity():
    p = zero_problem()
    assert all(theta_sample(r, p) == 0.0 for r in (0.1, 1.0, 10.0))


def test_theta_sample_monotone_sublevels():
    p = Problem.from_declaration({**example5_declaration(), "grid": {"M": 512, "R_max": 10.0, "quad_order": 6}})
    rs = [0.5, 1.0, 2.0, 4.0]
    vals = [theta_sample(r, p, seed=0) * r for r in rs]
    assert all(b >= a - 1e-8 for a, b in zip(vals, vals[1:]))


def test_theta_sample_below_majorant(flagship, flagship_threshold):
    t = flagship_threshold
    val = theta_sample(1.0, flagship)
    assert 0 < val <= t.majorant(1.0)
    # the zero function sits in every sublevel with Psi(0) = 0, so the sample is at least 0
    assert val >= 0.0


def test_threshold_report_invariants(flagship_threshold):
    t = flagship_threshold
    assert t.lambda_star == q_h_over(t)
    assert t.caveat == CQ_CAVEAT
    assert t.p == pytest.approx(1.5)
    for r, sample, maj in t.bound_curve:
        assert sample <= maj
    d = t.to_dict()
    assert d["grid"]["M"] in (2048, 2049) and "seed" in d and d["caveat"] == CQ_CAVEAT


def q_h_over(t):
    return t.q * t.h_max / (t.alpha_f * t.c_q_estimate)
