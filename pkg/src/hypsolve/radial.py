"""Piecewise-linear radial functions on a geodesic-radius grid.

A radial function u(x) = U(d_H(x)) has Dirichlet energy

    ||u||^2 = omega_{N-1} int_0^R U'(rho)^2 sinh^{N-1}(rho) d rho

and L^nu(dmu) norm (omega_{N-1} int |U|^nu sinh^{N-1} d rho)^{1/nu}.  The last
grid node carries a homogeneous Dirichlet value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.special import roots_legendre

from hypsolve.geometry import sphere_area


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    # log(sinh x) = x + log1p(-exp(-2x)) - log 2, stable for large x
    with np.errstate(divide="ignore"):
        return x + np.log1p(-np.exp(-2.0 * x)) - np.log(2.0)


def sinh_weight(rho, dim: int):
    """sinh^{dim-1}(rho), evaluated without overflow for moderate rho."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    pos = rho > 0
    out[pos] = np.exp((dim - 1) * _log_sinh(rho[pos]))
    return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    dim: int
    nodes: np.ndarray
    quad_order: int = 6

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        if self.dim < 3:
            raise ValueError("dimension must be >= 3")
        if nodes.size < 2 or nodes[0] != 0.0:
            raise ValueError("grid must start at 0 and have at least one cell")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, dim: int, M: int = 2048, R_max: float = 10.0, quad_order: int = 6, kinks=()) -> "RadialGrid":
        """Uniform grid with M cells, optionally with extra nodes placed exactly at `kinks`."""
        nodes = np.linspace(0.0, R_max, M + 1)
        if len(kinks):
            h = R_max / M
            nodes = list(nodes)
            for k in kinks:
                if not 0.0 < k < R_max:
                    if k == R_max:
                        continue
                    raise ValueError(f"kink {k} outside (0, R_max)")
                i = int(np.argmin(np.abs(np.asarray(nodes) - k)))
                if abs(nodes[i] - k) < 0.25 * h and 0 < i < len(nodes) - 1:
                    nodes[i] = k
                else:
                    nodes.append(k)
            nodes = np.unique(nodes)
        return cls(dim, nodes, quad_order)

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def R_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def omega(self) -> float:
        return sphere_area(self.dim)

    @cached_property
    def _reference_rule(self):
        xi, wi = roots_legendre(self.quad_order)
        return 0.5 * (xi + 1.0), 0.5 * wi

    @cached_property
    def points(self) -> np.ndarray:
        """Quadrature points, shape (M, quad_order)."""
        xi, _ = self._reference_rule
        return self.nodes[:-1, None] + self.widths[:, None] * xi

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights including the sinh^{N-1} Jacobian (omega excluded)."""
        _, wi = self._reference_rule
        return self.widths[:, None] * wi * sinh_weight(self.points, self.dim)

    @cached_property
    def shape_values(self):
        """Left and right hat-function values at the reference quadrature points."""
        xi, _ = self._reference_rule
        return 1.0 - xi, xi

    @cached_property
    def cell_stiffness(self) -> np.ndarray:
        """int_cell sinh^{N-1} / h^2 for each cell."""
        return self.weights.sum(axis=1) / self.widths**2

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        left, right = self.shape_values
        return values[:-1, None] * left + values[1:, None] * right

    def load(self, g: np.ndarray) -> np.ndarray:
        """Nodal vector omega * int g phi_i sinh^{N-1} for g sampled at the quadrature points."""
        left, right = self.shape_values
        gw = g * self.weights
        b = np.zeros(self.M + 1)
        b[:-1] += gw @ left
        b[1:] += gw @ right
        return self.omega * b

    def integrate(self, g: np.ndarray) -> float:
        return float(self.omega * np.sum(g * self.weights))

    @cached_property
    def _constrained_cholesky(self):
        a = self.omega * self.cell_stiffness
        diag = np.zeros(self.M + 1)
        diag[:-1] += a
        diag[1:] += a
        ab = np.zeros((2, self.M))
        ab[1] = diag[:-1]
        ab[0, 1:] = -a[:-1]
        return cholesky_banded(ab)

    def riesz(self, r: np.ndarray) -> np.ndarray:
        """Solve (omega S_c) g = r on the free nodes; returns a full nodal vector with g_M = 0."""
        g = np.zeros(self.M + 1)
        g[:-1] = cho_solve_banded((self._constrained_cholesky, False), r[: self.M])
        return g

    def metadata(self) -> dict:
        return {"dim": self.dim, "M": self.M, "R_max": self.R_max, "quad_order": self.quad_order}


@dataclass(frozen=True, eq=False)
class RadialFunction:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.nodes.size:
            raise ValueError(f"expected {self.grid.nodes.size} nodal values, got {v.size}")
        if v[-1] != 0.0:
            raise ValueError("value at R_max must be 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialFunction":
        return cls(grid, np.zeros(grid.nodes.size))

    @classmethod
    def from_profile(cls, grid: RadialGrid, profile: Callable) -> "RadialFunction":
        """Nodal interpolant of profile(rho); the last node is forced to 0."""
        v = np.array(profile(grid.nodes), dtype=float) * np.ones(grid.nodes.size)
        v[-1] = 0.0
        return cls(grid, v)

    @classmethod
    def from_free(cls, grid: RadialGrid, free: np.ndarray) -> "RadialFunction":
        v = np.zeros(grid.nodes.size)
        v[:-1] = free
        return cls(grid, v)

    def __call__(self, rho):
        return np.interp(rho, self.grid.nodes, self.values, right=0.0)

    def derivative(self, rho):
        """Piecewise-constant derivative (right-continuous), zero beyond R_max."""
        rho = np.asarray(rho, dtype=float)
        slopes = self.slopes
        idx = np.clip(np.searchsorted(self.grid.nodes, rho, side="right") - 1, 0, self.grid.M - 1)
        return np.where(rho < self.grid.R_max, slopes[idx], 0.0)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.grid.widths

    def at_quadrature(self) -> np.ndarray:
        return self.grid.interpolate(self.values)

    def _check(self, other: "RadialFunction"):
        if other.grid is not self.grid and not (
            other.grid.dim == self.grid.dim and np.array_equal(other.grid.nodes, self.grid.nodes)
        ):
            raise ValueError("functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return RadialFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return RadialFunction(self.grid, self.values - other.values)

    def __mul__(self, t):
        return RadialFunction(self.grid, float(t) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return RadialFunction(self.grid, -self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "value"])
            for r, v in zip(self.grid.nodes, self.values):
                w.writerow([f"{r:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, dim: int, quad_order: int = 6) -> "RadialFunction":
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        return cls(RadialGrid(dim, data[:, 0], quad_order), data[:, 1])


def dirichlet_energy(u: RadialFunction) -> float:
    g = u.grid
    return float(g.omega * np.sum(g.cell_stiffness * np.diff(u.values) ** 2))


def inner_product(u: RadialFunction, v: RadialFunction) -> float:
    u._check(v)
    g = u.grid
    return float(g.omega * np.sum(g.cell_stiffness * np.diff(u.values) * np.diff(v.values)))


def abs_power_integral(u: RadialFunction, power: float, weight: np.ndarray | None = None) -> float:
    """int w |u|^power dmu by the grid quadrature; `weight` is sampled at the quadrature points."""
    vals = np.abs(u.at_quadrature()) ** power
    if weight is not None:
        vals = vals * weight
    return u.grid.integrate(vals)


def critical_exponent(dim: int) -> float:
    return 2.0 * dim / (dim - 2.0)


def lebesgue_norm(u: RadialFunction, nu: float) -> float:
    if not 2.0 <= nu <= critical_exponent(u.grid.dim):
        raise ValueError(f"nu={nu} outside [2, 2N/(N-2)]")
    return abs_power_integral(u, nu) ** (1.0 / nu)


def assemble_operators(grid: RadialGrid, weight: Callable | None = None):
    """Sparse (stiffness, mass) with the sinh^{N-1} weight and omega_{N-1} factored out.

    u^T S u * omega = dirichlet_energy(u); u^T Mass u * omega = int weight u^2 dmu.
    """
    left, right = grid.shape_values
    if weight is None:
        wq = grid.weights
    else:
        alpha = np.asarray(weight(grid.points), dtype=float)
        if np.any(alpha < 0):
            raise ValueError("weight must be nonnegative")
        wq = grid.weights * alpha
    n = grid.M + 1
    cells = np.arange(grid.M)
    a = grid.cell_stiffness
    mll = wq @ (left * left)
    mlr = wq @ (left * right)
    mrr = wq @ (right * right)
    rows = np.concatenate([cells, cells, cells + 1, cells + 1])
    cols = np.concatenate([cells, cells + 1, cells, cells + 1])
    stiff = sp.coo_matrix((np.concatenate([a, -a, -a, a]), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((np.concatenate([mll, mlr, mlr, mrr]), (rows, cols)), shape=(n, n)).tocsr()
    return stiff, mass


def radial_integral(
    g: Callable, dim: int, R_max: float = 40.0, n_cells: int = 800, quad_order: int = 10
) -> float:
    """omega_{N-1} int_0^R g(rho) sinh^{N-1}(rho) d rho by composite Gauss-Legendre.

    Used for whole-space quantities (norms of the weight); pick R_max large
    enough that the tail is negligible.
    """
    xi, wi = roots_legendre(quad_order)
    edges = np.linspace(0.0, R_max, n_cells + 1)
    h = np.diff(edges)
    pts = edges[:-1, None] + h[:, None] * 0.5 * (xi + 1.0)
    vals = np.asarray(g(pts), dtype=float) * np.ones_like(pts)
    # product taken in log space to avoid overflow of sinh^{N-1}
    with np.errstate(divide="ignore"):
        prod = np.sign(vals) * np.exp(np.log(np.abs(vals)) + (dim - 1) * _log_sinh(pts))
    return float(sphere_area(dim) * np.sum(prod * (0.5 * h[:, None] * wi)))
