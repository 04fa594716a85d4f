"""Geodesic annuli, plateau test functions, and the scaling diagnostics built on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from hypsolve.functional import J_lambda, Nonlinearity, Phi, Psi, RadialWeight
from hypsolve.geometry import BallPoint, geodesic_distance_origin
from hypsolve.radial import RadialFunction, RadialGrid

DEFAULT_T_SEQUENCE = tuple(10.0 ** (-j) for j in range(1, 9))


@dataclass(frozen=True)
class Annulus:
    """Shell b - a < d_H(x) < b + a around the origin."""

    a: float
    b: float

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("annulus requires 0 < a < b")

    def contains_radius(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        return (self.b - self.a < rho) & (rho < self.b + self.a)


def annulus_membership(p: BallPoint, ann: Annulus) -> bool:
    return bool(ann.contains_radius(geodesic_distance_origin(p)))


def plateau_profile(rho, center: float, width: float):
    """1 on |rho - center| <= width/2, 0 beyond width, linear with slope 2/width in between."""
    d = np.abs(np.asarray(rho, dtype=float) - center)
    return np.clip(2.0 / width * (width - d), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class PlateauFunction(RadialFunction):
    rho: float = 2.0
    r: float = 1.0

    @property
    def kinks(self):
        return (self.rho - self.r, self.rho - self.r / 2, self.rho + self.r / 2, self.rho + self.r)


def build_plateau(rho: float, r: float, grid_hint: RadialGrid | None = None, dim: int = 3) -> PlateauFunction:
    """Plateau w_{rho,r} on a copy of `grid_hint` refined to carry nodes at its four kinks."""
    if not 0 < r < rho:
        raise ValueError("plateau requires 0 < r < rho")
    if grid_hint is None:
        grid_hint = RadialGrid.uniform(dim)
    if rho + r > grid_hint.R_max:
        raise ValueError(f"support (.., {rho + r}) exceeds R_max={grid_hint.R_max}")
    kinks = (rho - r, rho - r / 2, rho + r / 2, rho + r)
    if all(np.any(grid_hint.nodes == k) for k in kinks if k < grid_hint.R_max):
        grid = grid_hint
    else:
        nodes = np.unique(np.concatenate([grid_hint.nodes, [k for k in kinks if k < grid_hint.R_max]]))
        # drop nodes that nearly coincide with a kink so cells stay well shaped
        h = np.min(np.diff(grid_hint.nodes))
        keep = np.ones(nodes.size, bool)
        for k in kinks:
            near = (np.abs(nodes - k) < 1e-3 * h) & (nodes != k)
            keep &= ~near
        grid = RadialGrid(grid_hint.dim, nodes[keep], grid_hint.quad_order)
    vals = plateau_profile(grid.nodes, rho, r)
    vals[-1] = 0.0
    return PlateauFunction(grid, vals, rho=rho, r=r)


@dataclass
class DiagnosticRow:
    t: float
    Phi: float
    Psi: float
    ratio: float
    J_lambda: float
    in_sublevel: bool


@dataclass
class DiagnosticTable:
    rows: list = field(default_factory=list)
    blowup: bool = False
    first_negative_t: float | None = None

    @property
    def ratios(self) -> np.ndarray:
        return np.array([row.ratio for row in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "Phi", "Psi", "ratio", "J_lambda", "in_sublevel"])
            for row in self.rows:
                w.writerow([f"{row.t:.17g}", f"{row.Phi:.17g}", f"{row.Psi:.17g}", f"{row.ratio:.17g}",
                            f"{row.J_lambda:.17g}", str(row.in_sublevel).lower()])


def _check_t(t_sequence):
    t = np.asarray(t_sequence, dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(t > 1) or np.any(np.diff(t) >= 0):
        raise ValueError("t_sequence must be strictly decreasing inside (0, 1]")
    return t


def _table(w, nl, alpha, lam, t_sequence, omega_bar):
    rows = []
    for t in _check_t(t_sequence):
        wt = w * t
        phi, psi = Phi(wt), Psi(wt, alpha, nl)
        ratio = psi / phi
        J = phi - lam * psi
        rows.append(DiagnosticRow(float(t), phi, psi, ratio, J, bool(omega_bar is None or phi < omega_bar**2)))
    return rows


def ratio_blowup_diagnostic(
    w: RadialFunction, nl: Nonlinearity, alpha: RadialWeight, t_sequence=DEFAULT_T_SEQUENCE, lam: float = 0.0,
    omega_bar: float | None = None,
) -> DiagnosticTable:
    """Psi(t w) / Phi(t w) along t_j -> 0; `blowup` is set when the ratio increases strictly along the table."""
    if Phi(w) == 0:
        raise ValueError("w must be nontrivial")
    rows = _table(w, nl, alpha, lam, t_sequence, omega_bar)
    r = np.array([row.ratio for row in rows])
    blowup = bool(r.size > 1 and np.all(r[1:] > r[:-1] * (1.0 + 1e-9)) and r[-1] > 0)
    return DiagnosticTable(rows, blowup, None)


def negativity_diagnostic(
    w: RadialFunction, nl: Nonlinearity, alpha: RadialWeight, lam: float, t_sequence=DEFAULT_T_SEQUENCE,
    omega_bar: float | None = None,
) -> DiagnosticTable:
    """J_lambda(t w) on the table; `first_negative_t` is the largest t with negative energy."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    rows = _table(w, nl, alpha, lam, t_sequence, omega_bar)
    negative = [row.t for row in rows if row.J_lambda < 0]
    return DiagnosticTable(rows, False, max(negative) if negative else None)


def power_crossing(w: RadialFunction, nl: Nonlinearity, alpha: RadialWeight, lam: float) -> float:
    """t below which J_lambda(t w) < 0 for f = |t|^{r-2} t, r < 2: (lambda Psi(w) / Phi(w))^{1/(2-r)}."""
    if nl.kind != "power":
        raise ValueError("crossing formula needs a power nonlinearity")
    r = nl.declaration["r"]
    if r >= 2:
        raise ValueError("no small-t crossing for r >= 2")
    return float((lam * Psi(w, alpha, nl) / Phi(w)) ** (1.0 / (2.0 - r)))
