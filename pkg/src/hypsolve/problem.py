"""Problem declarations: JSON files, overrides, and the flagship example.

Declaration layout::

    {
      "dim": 4,
      "q": 3.0,
      "nonlinearity": {"kind": "power", "r": 1.5} | {"kind": "table", "samples": [[t, f], ...]},
      "weight": {"kind": "conformal_power", "exponent": 4} | {"kind": "table", "samples": [[rho, a], ...]},
      "grid": {"M": 2048, "R_max": 10.0, "quad_order": 6}
    }

Optional keys: "lambda", "lambdas", "omega_bar", "plateau" {"rho", "r"},
"solver" {"max_iters", "grad_tol"}.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from hypsolve.functional import Nonlinearity, RadialWeight
from hypsolve.radial import RadialGrid, critical_exponent

DEFAULT_GRID = {"M": 2048, "R_max": 10.0, "quad_order": 6}


def example5_declaration(r: float = 1.5, q: float = 3.0) -> dict:
    """N = 4, f(u) = |u|^{r-2} u, alpha = ((1 - |x|^2)/2)^4."""
    return {
        "dim": 4,
        "q": q,
        "nonlinearity": {"kind": "power", "r": r},
        "weight": {"kind": "conformal_power", "exponent": 4.0},
        "grid": dict(DEFAULT_GRID),
    }


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(decl: dict, overrides) -> dict:
    """Apply dotted key=value strings, e.g. "grid.M=512" or "lambda=0.5"."""
    out = copy.deepcopy(decl)
    for item in overrides or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {item!r} descends into a non-object")
        node[parts[-1]] = _parse_value(raw.strip())
    return out


@dataclass(eq=False)
class Problem:
    dim: int
    q: float
    nonlinearity: Nonlinearity
    weight: RadialWeight
    grid: RadialGrid
    declaration: dict

    @classmethod
    def from_declaration(cls, decl: dict) -> "Problem":
        try:
            dim = int(decl["dim"])
            q = float(decl["q"])
            nl_decl = decl["nonlinearity"]
            w_decl = decl["weight"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed problem declaration: {exc}") from exc
        if dim < 3:
            raise ValueError("dim must be >= 3")
        if not 2.0 < q < critical_exponent(dim):
            raise ValueError(f"q={q} must lie strictly inside (2, {critical_exponent(dim):g})")
        kind = nl_decl.get("kind")
        if kind == "power":
            nl = Nonlinearity.power(float(nl_decl["r"]), q)
        elif kind == "table":
            nl = Nonlinearity.table(nl_decl["samples"], q)
        else:
            raise ValueError(f"unknown nonlinearity kind {kind!r}")
        kind = w_decl.get("kind")
        if kind == "conformal_power":
            weight = RadialWeight.conformal_power(float(w_decl["exponent"]), dim)
        elif kind == "table":
            weight = RadialWeight.table(w_decl["samples"], dim)
        else:
            raise ValueError(f"unknown weight kind {kind!r}")
        g = {**DEFAULT_GRID, **decl.get("grid", {})}
        plateau = decl.get("plateau") or dict(zip(("rho", "r"), weight.essinf_data[:2]))
        rho, r = float(plateau["rho"]), float(plateau["r"])
        if not 0 < r < rho:
            raise ValueError("plateau requires 0 < r < rho")
        kinks = tuple(k for k in (rho - r, rho - r / 2, rho + r / 2, rho + r) if k < float(g["R_max"]))
        grid = RadialGrid.uniform(dim, int(g["M"]), float(g["R_max"]), int(g["quad_order"]), kinks=kinks)
        resolved = copy.deepcopy(decl)
        resolved["grid"] = g
        resolved["plateau"] = {"rho": rho, "r": r}
        return cls(dim, q, nl, weight, grid, resolved)

    def with_grid(self, grid: RadialGrid) -> "Problem":
        decl = copy.deepcopy(self.declaration)
        decl["grid"] = {"M": grid.M, "R_max": grid.R_max, "quad_order": grid.quad_order}
        return Problem(self.dim, self.q, self.nonlinearity, self.weight, grid, decl)

    @property
    def plateau(self) -> tuple[float, float]:
        return self.declaration["plateau"]["rho"], self.declaration["plateau"]["r"]

    @property
    def p(self) -> float:
        return self.q / (self.q - 1.0)


def load_problem(path, overrides=()) -> Problem:
    decl = json.loads(Path(path).read_text())
    return Problem.from_declaration(apply_overrides(decl, overrides))
