"""Second-order Taylor jets in two variables.

A :class:`Jet2` carries a value together with its gradient and Hessian
with respect to ``(x, y)``.  Components may be floats or numpy arrays of a
common shape; the arithmetic below is the reference for the compiled
kernel, which repeats the same formulas in the same evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .expr import DomainError, Expr, compile_tape, parse

__all__ = ["Jet2", "DomainError", "eval_jet", "eval", "jet_sin", "jet_cos", "jet_exp"]


@dataclass(frozen=True)
class Jet2:
    v: Any
    gx: Any = 0.0
    gy: Any = 0.0
    hxx: Any = 0.0
    hxy: Any = 0.0
    hyy: Any = 0.0

    @classmethod
    def const(cls, c):
        z = c * 0.0
        return cls(c, z, z, z, z, z)

    @classmethod
    def var_x(cls, x):
        z = x * 0.0
        return cls(x, z + 1.0, z, z, z, z)

    @classmethod
    def var_y(cls, y):
        z = y * 0.0
        return cls(y, z, z + 1.0, z, z, z)

    def astuple(self):
        return (self.v, self.gx, self.gy, self.hxx, self.hxy, self.hyy)

    def __add__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v + o.v, self.gx + o.gx, self.gy + o.gy,
                    self.hxx + o.hxx, self.hxy + o.hxy, self.hyy + o.hyy)

    def __sub__(self, o: "Jet2") -> "Jet2":
        return Jet2(self.v - o.v, self.gx - o.gx, self.gy - o.gy,
                    self.hxx - o.hxx, self.hxy - o.hxy, self.hyy - o.hyy)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.v, -self.gx, -self.gy, -self.hxx, -self.hxy, -self.hyy)

    def __mul__(self, o: "Jet2") -> "Jet2":
        a, b = self, o
        return Jet2(
            a.v * b.v,
            a.gx * b.v + a.v * b.gx,
            a.gy * b.v + a.v * b.gy,
            a.hxx * b.v + 2.0 * a.gx * b.gx + a.v * b.hxx,
            a.hxy * b.v + a.gx * b.gy + a.gy * b.gx + a.v * b.hxy,
            a.hyy * b.v + 2.0 * a.gy * b.gy + a.v * b.hyy,
        )

    def __truediv__(self, o: "Jet2") -> "Jet2":
        a, b = self, o
        q = a.v / b.v
        qx = (a.gx - q * b.gx) / b.v
        qy = (a.gy - q * b.gy) / b.v
        return Jet2(
            q,
            qx,
            qy,
            (a.hxx - 2.0 * qx * b.gx - q * b.hxx) / b.v,
            (a.hxy - qx * b.gy - qy * b.gx - q * b.hxy) / b.v,
            (a.hyy - 2.0 * qy * b.gy - q * b.hyy) / b.v,
        )

    def __pow__(self, n: int) -> "Jet2":
        if n == 0:
            one = np.ones_like(self.v) if isinstance(self.v, np.ndarray) else 1.0
            return Jet2.const(one)
        p = self
        for _ in range(n - 1):
            p = p * self
        return p

    def chain(self, f0, f1, f2) -> "Jet2":
        """Compose with a scalar function given its value and two derivatives at ``v``."""
        a = self
        return Jet2(
            f0,
            f1 * a.gx,
            f1 * a.gy,
            f2 * a.gx * a.gx + f1 * a.hxx,
            f2 * a.gx * a.gy + f1 * a.hxy,
            f2 * a.gy * a.gy + f1 * a.hyy,
        )


def jet_sin(a: Jet2) -> Jet2:
    s = np.sin(a.v)
    return a.chain(s, np.cos(a.v), -s)


def jet_cos(a: Jet2) -> Jet2:
    c = np.cos(a.v)
    return a.chain(c, -np.sin(a.v), -c)


def jet_exp(a: Jet2) -> Jet2:
    e = np.exp(a.v)
    return a.chain(e, e, e)


def _as_expr(e) -> Expr:
    return parse(e) if isinstance(e, str) else e


def _scalar_point(p):
    x, y = p
    return np.array([float(x)]), np.array([float(y)])


def eval_jet(e, p) -> Jet2:
    """Exact value, gradient and Hessian of expression ``e`` at point ``p``.

    >>> eval_jet("x^2/2", (3.0, 7.0))
    Jet2(v=4.5, gx=3.0, gy=0.0, hxx=1.0, hxy=0.0, hyy=0.0)
    """
    from .kernels import eval_tape

    xs, ys = _scalar_point(p)
    out = eval_tape(compile_tape(_as_expr(e)), xs, ys, order=2)
    return Jet2(*(float(c[0]) for c in out))


def eval(e, p) -> float:
    """Value of ``e`` at ``p``; bitwise equal to ``eval_jet(e, p).v``."""
    from .kernels import eval_tape

    xs, ys = _scalar_point(p)
    (v,) = eval_tape(compile_tape(_as_expr(e)), xs, ys, order=0)
    return float(v[0])

