"""Closed-form primitives of the Poincare ball model B^N.

Points live in the open Euclidean unit ball with the conformal metric
4 (1 - |x|^2)^-2 delta_ij.  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

# Points closer than this to the unit sphere are rejected; (1-|x|^2)^-N overflows otherwise.
BOUNDARY_GUARD = 1e-12


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^{dim-1} in R^dim."""
    return float(2.0 * np.exp(0.5 * dim * np.log(np.pi) - gammaln(0.5 * dim)))


def _check_radius(s) -> None:
    s = np.asarray(s)
    if not np.all(np.isfinite(s)) or np.any(s > 1.0 - BOUNDARY_GUARD):
        raise ValueError("point outside the Poincare ball (|x| must be < 1 - 1e-12)")


@dataclass(frozen=True, eq=False)
class BallPoint:
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if coords.size < 3:
            raise ValueError(f"dimension must be >= 3, got {coords.size}")
        _check_radius(np.linalg.norm(coords))
        object.__setattr__(self, "coords", coords)

    @classmethod
    def origin(cls, dim: int) -> "BallPoint":
        return cls(np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.coords.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __eq__(self, other):
        return isinstance(other, BallPoint) and np.array_equal(self.coords, other.coords)

    def __repr__(self):
        return f"BallPoint({self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class GeodesicPolar:
    """Geodesic polar coordinates (rho, theta) about the origin."""

    rho: float
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if self.rho < 0:
            raise ValueError("geodesic radius must be nonnegative")
        if abs(np.linalg.norm(theta) - 1.0) > 1e-12:
            raise ValueError("theta must be a unit vector")
        object.__setattr__(self, "theta", theta)

    def to_ball(self) -> BallPoint:
        return BallPoint(np.tanh(0.5 * self.rho) * self.theta)

    @classmethod
    def from_ball(cls, p: BallPoint) -> "GeodesicPolar":
        if p.norm == 0.0:
            theta = np.zeros(p.dim)
            theta[0] = 1.0
            return cls(0.0, theta)
        return cls(geodesic_distance_origin(p), p.coords / p.norm)


@dataclass(frozen=True, eq=False)
class Rotation:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("rotation matrix must be square")
        if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > 1e-10:
            raise ValueError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > 1e-10:
            raise ValueError("rotation matrix must have determinant +1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Rotation":
        return cls(np.eye(dim))

    @classmethod
    def planar(cls, dim: int, i: int, j: int, angle: float) -> "Rotation":
        """Rotation by `angle` in the (x_i, x_j) coordinate plane."""
        m = np.eye(dim)
        c, s = np.cos(angle), np.sin(angle)
        m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
        return cls(m)

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(self.matrix @ other.matrix)


def random_rotation(dim: int, rng: np.random.Generator | int | None = None) -> Rotation:
    """Haar-distributed element of SO(dim) via QR of a Gaussian matrix."""
    rng = np.random.default_rng(rng)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return Rotation(q)


def geodesic_radius(s):
    """Geodesic distance from the origin as a function of Euclidean radius (vectorized)."""
    _check_radius(s)
    return 2.0 * np.arctanh(s)


def geodesic_distance_origin(p: BallPoint) -> float:
    return float(geodesic_radius(p.norm))


def geodesic_distance(p1: BallPoint, p2: BallPoint) -> float:
    if p1.dim != p2.dim:
        raise ValueError(f"dimension mismatch: {p1.dim} vs {p2.dim}")
    # arccosh(1 + 2 d^2 / (a b)) rewritten as 2 asinh(d / sqrt(a b)); exact near the diagonal
    d = np.linalg.norm(p2.coords - p1.coords)
    ab = (1.0 - p1.norm**2) * (1.0 - p2.norm**2)
    return float(2.0 * np.arcsinh(d / np.sqrt(ab)))


def conformal_factor(s):
    """(1 - |x|^2) / 2, the factor turning Euclidean gradient norms into metric norms."""
    return 0.5 * (1.0 - np.asarray(s) ** 2)


def volume_density(p: BallPoint) -> float:
    return float(2.0**p.dim * (1.0 - p.norm**2) ** (-p.dim))


def covariant_gradient_norm(p: BallPoint, euclidean_gradient) -> float:
    """Metric norm of the gradient of u at p, given its Euclidean gradient there."""
    return float(conformal_factor(p.norm) * np.linalg.norm(euclidean_gradient))


def euclidean_radius_of_geodesic_ball(R: float) -> float:
    if not R > 0:
        raise ValueError("geodesic radius must be positive")
    return float(np.tanh(0.5 * R))


def apply_rotation(g: Rotation, p: BallPoint) -> BallPoint:
    if g.dim != p.dim:
        raise ValueError(f"dimension mismatch: rotation {g.dim} vs point {p.dim}")
    return BallPoint(g.matrix @ p.coords)


def rotate_field(g: Rotation, u: Callable) -> Callable:
    """The action (g * u)(x) = u(g^-1 x) on fields taking an (n, N) array of points."""
    return lambda pts: u(np.asarray(pts) @ g.matrix)


def sample_ball(dim: int, n: int, cutoff_radius: float, rng: np.random.Generator) -> np.ndarray:
    """n points uniform (Lebesgue) in the Euclidean ball of radius cutoff_radius."""
    x = rng.standard_normal((n, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * (cutoff_radius * rng.random(n) ** (1.0 / dim))[:, None]


def montecarlo_integral_dmu(
    h: Callable,
    dim: int,
    n_samples: int,
    cutoff_radius: float,
    seed: int = 0,
    chunk: int = 200_000,
) -> tuple[float, float]:
    """Estimate the integral of h over B(cutoff_radius) against the hyperbolic volume.

    Points are drawn uniformly in the Euclidean ball and reweighted by the
    volume density.  `h` maps an (n, dim) array of points to n values.
    Returns (estimate, standard error).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0.0 < cutoff_radius < 1.0:
        raise ValueError("cutoff_radius must lie in (0, 1)")
    cutoff_radius = min(cutoff_radius, 1.0 - BOUNDARY_GUARD)
    rng = np.random.default_rng(seed)
    vol = sphere_area(dim) / dim * cutoff_radius**dim
    total, total_sq, done = 0.0, 0.0, 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        pts = sample_ball(dim, m, cutoff_radius, rng)
        vals = np.asarray(h(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand returned non-finite values")
        s2 = np.sum(pts**2, axis=1)
        w = vals * 2.0**dim * (1.0 - s2) ** (-dim)
        total += w.sum()
        total_sq += np.sum(w**2)
        done += m
    mean = total / n_samples
    if n_samples == 1:
        return vol * mean, float("inf")
    var = max(total_sq / n_samples - mean**2, 0.0) * n_samples / (n_samples - 1)
    return float(vol * mean), float(vol * np.sqrt(var / n_samples))


def property_checks(seed: int = 0, n: int = 1000, dim: int = 3) -> dict[str, bool]:
    """Sampled metric-space and symmetry checks used by the `geomcheck` command."""
    rng = np.random.default_rng(seed)

    def rand_point():
        x = rng.standard_normal(dim)
        return BallPoint(x / np.linalg.norm(x) * rng.uniform(0, 0.99))

    sym, tri, ball, rot, cons = True, True, True, True, True
    for _ in range(n):
        a, b, c = rand_point(), rand_point(), rand_point()
        dab, dba = geodesic_distance(a, b), geodesic_distance(b, a)
        sym &= abs(dab - dba) <= 1e-12 * max(1.0, dab)
        tri &= geodesic_distance(a, c) <= dab + geodesic_distance(b, c) + 1e-10
        r = rng.uniform(0.01, 0.99)
        ball &= (geodesic_distance_origin(a) < np.log((1 + r) / (1 - r))) == (a.norm < r)
        g = random_rotation(dim, rng)
        rot &= abs(geodesic_distance(apply_rotation(g, a), apply_rotation(g, b)) - dab) <= 1e-10 * max(1.0, dab)
        cons &= abs(geodesic_distance(BallPoint.origin(dim), a) - geodesic_distance_origin(a)) <= 1e-12 * max(
            1.0, geodesic_distance_origin(a)
        )
    return {
        "symmetry": bool(sym),
        "triangle_inequality": bool(tri),
        "ball_correspondence": bool(ball),
        "rotation_invariance": bool(rot),
        "origin_consistency": bool(cons),
    }
