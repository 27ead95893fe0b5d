"""Extragradient iteration for zeros of monotone planar fields."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .certify import SCHEMA_VERSION, dumps
from .fields import DEFAULT_GRID, DEFAULT_REGION, GridSpec, Region, VectorField2


@dataclass
class SolveTrace:
    final_point: tuple
    final_residual: float  # sup-norm of F at the final point
    iterations: int
    step: float
    lipschitz: float
    converged: bool
    tol: float
    max_iter: int
    iterates: list = field(default_factory=list, repr=False)  # (k, x, y, residual)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "solve_trace",
            "method": "extragradient",
            "converged": self.converged,
            "final_point": list(self.final_point),
            "final_residual": self.final_residual,
            "iterations": self.iterations,
            "step": self.step,
            "lipschitz_estimate": self.lipschitz,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "x", "y", "residual"])
            for k, x, y, r in self.iterates:
                w.writerow([k, f"{x:.17g}", f"{y:.17g}", f"{r:.17g}"])


def lipschitz_estimate(F: VectorField2, region: Region = DEFAULT_REGION,
                       grid: GridSpec = DEFAULT_GRID) -> float:
    """Largest Frobenius norm of the Jacobian over the grid (bounds the operator norm)."""
    xs, ys = grid.points(region)
    ev = F.evaluate(xs, ys)
    fro = np.sqrt(ev.j11 ** 2 + ev.j12 ** 2 + ev.j21 ** 2 + ev.j22 ** 2)
    return float(fro.max())


def extragradient(F: VectorField2, z0, tol: float = 1e-8, max_iter: int = 100_000,
                  region: Region = DEFAULT_REGION, grid: GridSpec = DEFAULT_GRID,
                  step: float | None = None, record_every: int = 0) -> SolveTrace:
    """Korpelevich extragradient with constant step ``1 / (2L)``.

    ``z_half = z - eta F(z)``, ``z_next = z - eta F(z_half)``; stops once
    ``|F(z)|_inf <= tol``.  Running out of iterations is reported in the
    trace, not raised.  ``record_every=k`` keeps every k-th iterate.
    """
    L = lipschitz_estimate(F, region, grid)
    if step is None:
        if L <= 0.0:
            raise ValueError("Lipschitz estimate is zero; pass an explicit step")
        step = 1.0 / (2.0 * L)
    z = np.array([float(z0[0]), float(z0[1])])
    iterates = []
    k = 0
    while True:
        fz = np.array(F(z))
        res = float(np.max(np.abs(fz)))
        if record_every and k % record_every == 0:
            iterates.append((k, float(z[0]), float(z[1]), res))
        if res <= tol or k >= max_iter:
            break
        half = z - step * fz
        z = z - step * np.array(F(half))
        k += 1
    if record_every and iterates[-1][0] != k:
        iterates.append((k, float(z[0]), float(z[1]), res))
    return SolveTrace((float(z[0]), float(z[1])), res, k, float(step), L, res <= tol,
                      float(tol), int(max_iter), iterates)
