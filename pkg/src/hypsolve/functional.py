"""Problem data and the energy J_lambda = Phi - lambda Psi on radial functions."""

from __future__ import annotations

import warnings
import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.ndimage import minimum_filter1d

from hypsolve.radial import RadialFunction, RadialGrid, abs_power_integral, dirichlet_energy, radial_integral


class GrowthConditionWarning(UserWarning):
    """The growth-constant search peaked at the edge of its interval."""


def golden_section_max(
    better: Callable, lo: float, hi: float, xtol: float = 1e-15, atol: float = 0.0, max_iter: int = 400
) -> float:
    """Golden-section search for the maximizer of a unimodal function on [lo, hi].

    `better(a, b)` must return True when the objective at a exceeds the one at b;
    passing a comparator (instead of values) lets callers compare stably.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(abs(a), abs(b), 1e-300) + atol:
            break
        if better(c, d):
            b, d = d, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d
            d = a + invphi * (b - a)
    return 0.5 * (a + b)


def compute_alpha_f(f: Callable, q: float, search_bound: float = 1e3, grid_size: int = 4000) -> float:
    """sup_t |f(t)| / (1 + |t|^{q-1}) by dense log-spaced search and golden-section refinement.

    Warns with GrowthConditionWarning when the best grid point sits on the
    edge of [-search_bound, search_bound].
    """
    if search_bound <= 0:
        raise ValueError("search_bound must be positive")
    if grid_size < 1000:
        raise ValueError("grid_size must be >= 1000")

    def ratio(t):
        t = np.asarray(t, dtype=float)
        v = np.abs(np.asarray(f(t), dtype=float)) / (1.0 + np.abs(t) ** (q - 1.0))
        if not np.all(np.isfinite(v)):
            raise ValueError("nonlinearity returned non-finite values")
        return v * np.ones_like(t)

    pos = np.logspace(np.log10(search_bound) - 12.0, np.log10(search_bound), grid_size // 2)
    t = np.concatenate([-pos[::-1], [0.0], pos])
    vals = ratio(t)
    i = int(np.argmax(vals))
    best = float(vals[i])
    if i in (0, t.size - 1) and best > 0:
        warnings.warn(
            f"growth ratio maximal at the search boundary t={t[i]:g}; the growth condition may fail",
            GrowthConditionWarning,
            stacklevel=2,
        )
        return best
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    x = golden_section_max(lambda a, b: ratio(a) > ratio(b), lo, hi, xtol=1e-12)
    return max(best, float(ratio(x)))


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Reaction term f with its primitive F (F(0) = 0) and growth constant alpha_f."""

    f: Callable
    F: Callable
    q: float
    alpha_f: float = None
    declaration: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alpha_f is None:
            object.__setattr__(self, "alpha_f", compute_alpha_f(self.f, self.q))
        if self.alpha_f < 0:
            raise ValueError("alpha_f must be nonnegative")

    @property
    def kind(self) -> str:
        return self.declaration.get("kind", "custom")

    @classmethod
    def power(cls, r: float, q: float) -> "Nonlinearity":
        """f(t) = |t|^{r-2} t with F(t) = |t|^r / r."""
        if r <= 1:
            raise ValueError("power exponent r must exceed 1")

        def f(t):
            t = np.asarray(t, dtype=float)
            return np.sign(t) * np.abs(t) ** (r - 1.0)

        def F(t):
            return np.abs(np.asarray(t, dtype=float)) ** r / r

        return cls(f, F, q, declaration={"kind": "power", "r": r})

    @classmethod
    def from_callable(cls, f: Callable, q: float, F: Callable | None = None, alpha_f: float | None = None):
        """Arbitrary continuous f; F by adaptive quadrature when not supplied."""
        if F is None:

            def F_scalar(t):
                val, _ = integrate.quad(lambda s: float(f(np.asarray(s))), 0.0, t, epsabs=1e-12, epsrel=1e-12)
                return val

            vec = np.vectorize(F_scalar, otypes=[float])

            def F(t):
                return vec(np.asarray(t, dtype=float))

        return cls(f, F, q, alpha_f)

    @classmethod
    def table(cls, samples, q: float) -> "Nonlinearity":
        """Piecewise-linear f through (t, f(t)) samples, constant beyond the table."""
        data = np.asarray(samples, dtype=float)
        order = np.argsort(data[:, 0])
        ts, fs = data[order, 0], data[order, 1]
        if not np.all(np.isfinite(data)):
            raise ValueError("table contains non-finite values")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("table abscissae must be distinct")
        # cumulative primitive at the knots (exact for piecewise-linear f), shifted so F(0) = 0
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (fs[1:] + fs[:-1]) * np.diff(ts))])

        def f(t):
            return np.interp(t, ts, fs)

        def _prim(t):
            t = np.asarray(t, dtype=float)
            k = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 1)
            tk, fk = ts[k], fs[k]
            below = t < ts[0]
            ft = f(t)
            inside = cum[k] + 0.5 * (fk + ft) * (t - tk)
            return np.where(below, (t - ts[0]) * fs[0], inside)

        shift = float(_prim(0.0))

        def F(t):
            return _prim(t) - shift

        return cls(f, F, q, declaration={"kind": "table", "samples": data.tolist()})

    def check_primitive(self, n: int = 100, seed: int = 0, span: float = 10.0) -> bool:
        """F(0) = 0 and F' = f at sampled points by central differences (1e-6 relative)."""
        if abs(float(self.F(0.0))) > 1e-14:
            return False
        t = np.random.default_rng(seed).uniform(-span, span, n)
        h = 1e-5 * np.maximum(1.0, np.abs(t))
        fd = (self.F(t + h) - self.F(t - h)) / (2 * h)
        ft = self.f(t)
        return bool(np.all(np.abs(fd - ft) <= 1e-6 * np.maximum(np.abs(ft), 1.0)))


class RadialWeight:
    """Nonnegative radial potential alpha, given as a function of the geodesic radius.

    Norms are whole-space norms with respect to dmu.
    """

    def __init__(self, profile: Callable, dim: int, declaration: dict | None = None, tail_radius: float = 40.0,
                 essinf_data: tuple[float, float, float] | None = None):
        self.profile = profile
        self.dim = dim
        self.declaration = declaration or {"kind": "custom"}
        self.tail_radius = tail_radius
        self._cache = weakref.WeakKeyDictionary()
        self._norms: dict[float, float] = {}
        sample = self(np.linspace(0.0, tail_radius, 20001))
        if np.any(sample < 0) or not np.all(np.isfinite(sample)):
            raise ValueError("weight must be finite and nonnegative")
        self._sample = sample
        if essinf_data is None:
            essinf_data = self._find_witness()
        self.essinf_data = essinf_data

    @classmethod
    def conformal_power(cls, exponent: float, dim: int) -> "RadialWeight":
        """alpha = ((1 - |x|^2)/2)^exponent = (1 + cosh rho)^-exponent."""
        return cls(lambda rho: (1.0 + np.cosh(np.asarray(rho, dtype=float))) ** (-exponent), dim,
                   {"kind": "conformal_power", "exponent": exponent})

    @classmethod
    def table(cls, samples, dim: int) -> "RadialWeight":
        """Linear interpolation through (rho, alpha) samples, zero beyond the last sample."""
        data = np.asarray(samples, dtype=float)
        rs, vs = data[:, 0], data[:, 1]
        if np.any(np.diff(rs) <= 0):
            raise ValueError("weight table radii must increase")
        return cls(lambda rho: np.interp(rho, rs, vs, right=0.0), dim, {"kind": "table", "samples": data.tolist()})

    def __call__(self, rho):
        return np.asarray(self.profile(rho), dtype=float) * np.ones(np.shape(rho))

    def on(self, grid: RadialGrid) -> np.ndarray:
        """alpha at the grid's quadrature points (cached per grid)."""
        if grid not in self._cache:
            self._cache[grid] = self(grid.points)
        return self._cache[grid]

    def norm(self, p: float) -> float:
        if p not in self._norms:
            self._norms[p] = radial_integral(lambda r: self(r) ** p, self.dim, self.tail_radius) ** (1.0 / p)
        return self._norms[p]

    @property
    def norm_inf(self) -> float:
        return float(self._sample.max())

    def _find_witness(self):
        """(rho, r, alpha0) with alpha >= alpha0 > 0 on the annulus rho - r < d_H < rho + r.

        Prefers the (2, 1) annulus when alpha is positive there; otherwise
        scans window widths and maximizes alpha0 times width.
        """
        grid = np.linspace(0.0, self.tail_radius, self._sample.size)
        window = (grid > 1.0) & (grid < 3.0)
        if self._sample[window].min() > 0:
            return self._closed_min(2.0, 1.0)
        dx = grid[1] - grid[0]
        best = (0.0, None)
        for width in np.unique(np.geomspace(3, self._sample.size // 4, 60).astype(int)):
            mins = minimum_filter1d(self._sample, size=width, mode="constant", cval=0.0)
            centers = np.arange(self._sample.size)
            half = width // 2
            score = mins * width
            valid = (centers - half > 0) & (centers + half < self._sample.size - 1)
            score = np.where(valid, score, 0.0)
            k = int(np.argmax(score))
            if score[k] > best[0]:
                best = (score[k], (grid[k], half * dx, float(mins[k])))
        if best[1] is None:
            raise ValueError("weight vanishes identically")
        return self._closed_min(*best[1][:2])

    def _closed_min(self, rho: float, r: float, n: int = 100_001):
        """(rho, r, min alpha) over a dense sample of the closed shell, a lower bound for the ess-inf."""
        a0 = float(self(np.linspace(rho - r, rho + r, n)).min())
        if a0 <= 0:
            raise ValueError("weight has no positive annulus")
        return float(rho), float(r), a0


def Phi(u: RadialFunction) -> float:
    return 0.5 * dirichlet_energy(u)


def _check_dims(u: RadialFunction, alpha: RadialWeight):
    if u.grid.dim != alpha.dim:
        raise ValueError(f"dimension mismatch: function N={u.grid.dim}, weight N={alpha.dim}")


def Psi(u: RadialFunction, alpha: RadialWeight, nl: Nonlinearity) -> float:
    _check_dims(u, alpha)
    Fu = np.asarray(nl.F(u.at_quadrature()), dtype=float)
    if not np.all(np.isfinite(Fu)):
        raise ValueError("primitive F returned non-finite values")
    return u.grid.integrate(alpha.on(u.grid) * Fu)


def J_lambda(u: RadialFunction, lam: float, alpha: RadialWeight, nl: Nonlinearity) -> float:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    phi = Phi(u)
    return phi if lam == 0 else phi - lam * Psi(u, alpha, nl)


def psi_gradient(u: RadialFunction, alpha: RadialWeight, nl: Nonlinearity) -> np.ndarray:
    """Nodal vector int alpha f(u) phi_i dmu for every hat function (last node included)."""
    _check_dims(u, alpha)
    fu = np.asarray(nl.f(u.at_quadrature()), dtype=float)
    if not np.all(np.isfinite(fu)):
        raise ValueError("nonlinearity returned non-finite values")
    return u.grid.load(alpha.on(u.grid) * fu)


def energy_gradient(u: RadialFunction) -> np.ndarray:
    """Nodal vector <u, phi_i> in the energy inner product."""
    g = u.grid
    a = g.omega * g.cell_stiffness * np.diff(u.values)
    out = np.zeros(g.M + 1)
    out[:-1] -= a
    out[1:] += a
    return out


def weak_residual(u: RadialFunction, lam: float, alpha: RadialWeight, nl: Nonlinearity):
    """(residual on the free nodes, dual energy norm of the residual).

    residual_i = <u, phi_i> - lambda int alpha f(u) phi_i dmu, i.e. the
    derivative of J_lambda along phi_i.  The norm is sqrt(r^T (omega S_c)^-1 r).
    """
    r = energy_gradient(u)
    if lam != 0:
        r = r - lam * psi_gradient(u, alpha, nl)
    r = r[:-1]
    g = u.grid.riesz(r)[:-1]
    return r, float(np.sqrt(max(r @ g, 0.0)))


def growth_bound_chain(u: RadialFunction, alpha: RadialWeight, nl: Nonlinearity):
    """The two sides of Psi(u) <= alpha_f int alpha|u| + (alpha_f/q) int alpha|u|^q."""
    a = alpha.on(u.grid)
    lhs = Psi(u, alpha, nl)
    rhs = nl.alpha_f * abs_power_integral(u, 1.0, a) + nl.alpha_f / nl.q * abs_power_integral(u, nl.q, a)
    return lhs, rhs


_S_NODES, _S_WEIGHTS = np.polynomial.legendre.leggauss(6)


def energy_change(u: RadialFunction, d: RadialFunction, lam: float, alpha: RadialWeight, nl: Nonlinearity) -> float:
    """J_lambda(u + d) - J_lambda(u) without subtracting two large energies.

    The Psi increment is int alpha d int_0^1 f(u + s d) ds dmu, with the inner
    integral done by Gauss-Legendre in s.
    """
    grid = u.grid
    dq = np.diff(d.values)
    quad = 0.5 * grid.omega * np.sum(grid.cell_stiffness * dq * dq)
    cross = grid.omega * np.sum(grid.cell_stiffness * np.diff(u.values) * dq)
    if lam == 0:
        return float(quad + cross)
    uq, dqp = u.at_quadrature(), d.at_quadrature()
    acc = np.zeros_like(uq)
    for s, w in zip(0.5 * (_S_NODES + 1.0), 0.5 * _S_WEIGHTS):
        acc += w * np.asarray(nl.f(uq + s * dqp), dtype=float)
    dpsi = grid.integrate(alpha.on(grid) * acc * dqp)
    return float(quad + cross - lam * dpsi)
