"""Planar scalar and vector fields, their algebra, and 2x2 matrix helpers.

Fields are evaluated on whole arrays of points at once.  A scalar field
returns a :class:`~monocert.jet.Jet2` of arrays; a vector field returns a
:class:`FieldEval` holding the value and Jacobian at every point.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import Expr, compile_tape, parse, pretty
from .jet import Jet2
from .kernels import eval_tape

__all__ = [
    "Mat2",
    "Region",
    "GridSpec",
    "FieldEval",
    "ScalarField2",
    "VectorField2",
    "gradient_field",
    "saddle_field",
    "add",
    "scale",
    "shift",
    "jacobian",
    "sym_split",
    "min_sym_eig",
    "asymmetry",
    "sym_min_eig_arrays",
    "F_PLUS_EXPR",
    "F_MINUS_EXPR",
    "f_plus",
    "f_minus",
    "F_plus",
    "F_minus",
    "F_plus_closed",
    "F_minus_closed",
    "identity_field",
    "skew_affine_field",
    "constant_field",
    "builtin_operator",
]

EPS = sys.float_info.epsilon
FD_STEP = EPS ** (1.0 / 3.0)


# --------------------------------------------------------------------------
# 2x2 matrices


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    def __add__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)

    def transpose(self) -> "Mat2":
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def tolist(self):
        return [[self.a11, self.a12], [self.a21, self.a22]]


def sym_split(m: Mat2) -> tuple[Mat2, Mat2]:
    """Return ``(S, K)`` with ``S = (M + M^T)/2`` and ``K = (M - M^T)/2``.

    ``K`` is exactly skew; ``S + K`` reproduces ``m`` up to one rounding
    in the off-diagonal (exactly when the entries are dyadic of equal scale).
    """
    q = (m.a12 + m.a21) / 2.0
    k = (m.a12 - m.a21) / 2.0
    return Mat2(m.a11, q, q, m.a22), Mat2(0.0, k, -k, 0.0)


def sym_min_eig_arrays(a11, a12, a21, a22):
    """Smallest eigenvalue of the symmetric part, elementwise.

    Closed 2x2 formula ``mean - hypot(half_gap, q)``; when the symmetric
    off-diagonal vanishes the result is ``min(a11, a22)`` exactly.
    """
    a11 = np.asarray(a11, dtype=float)
    a22 = np.asarray(a22, dtype=float)
    q = (np.asarray(a12, dtype=float) + np.asarray(a21, dtype=float)) / 2.0
    mean = (a11 + a22) / 2.0
    rad = np.hypot((a11 - a22) / 2.0, q)
    return np.where(q == 0.0, np.minimum(a11, a22), mean - rad)


def min_sym_eig(m: Mat2) -> float:
    return float(sym_min_eig_arrays(m.a11, m.a12, m.a21, m.a22))


def asymmetry(m: Mat2) -> float:
    """Integrability residual ``a12 - a21``; zero for every Jacobian of a gradient."""
    return m.a12 - m.a21


# --------------------------------------------------------------------------
# regions and grids


@dataclass(frozen=True)
class Region:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"region bounds must be finite: {vals}")
        for lo, hi, axis in ((self.xmin, self.xmax, "x"), (self.ymin, self.ymax, "y")):
            scale = max(1.0, abs(lo), abs(hi))
            if not hi - lo > 10.0 * EPS * scale:
                raise ValueError(f"degenerate region: {axis} interval [{lo!r}, {hi!r}]")

    @classmethod
    def square(cls, half_width: float = math.pi) -> "Region":
        return cls(-half_width, half_width, -half_width, half_width)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def contains(self, p) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax

    def to_dict(self) -> dict:
        return {"xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax}


DEFAULT_REGION = Region.square(math.pi)


@dataclass(frozen=True)
class GridSpec:
    nx: int = 129
    ny: int = 129

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs integer nx, ny >= 2, got {self.nx}x{self.ny}")

    def axes(self, region: Region) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(region.xmin, region.xmax, self.nx),
                np.linspace(region.ymin, region.ymax, self.ny))

    def points(self, region: Region) -> tuple[np.ndarray, np.ndarray]:
        """Flattened lattice coordinates, x-major (index ``i * ny + j``)."""
        xs, ys = self.axes(region)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return X.ravel(), Y.ravel()

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny}


DEFAULT_GRID = GridSpec(129, 129)


# --------------------------------------------------------------------------
# scalar fields


class ScalarField2:
    """Scalar field with exact second-order derivatives.

    ``jet_fn(xs, ys)`` maps 1-d coordinate arrays to a :class:`Jet2` of arrays.
    """

    def __init__(self, jet_fn: Callable, name: str, source: str | None = None,
                 expr: Expr | None = None):
        self._jet_fn = jet_fn
        self.name = name
        self.source = source if source is not None else name
        self.expr = expr

    @classmethod
    def from_expr(cls, e, name: str | None = None) -> "ScalarField2":
        tree = parse(e) if isinstance(e, str) else e
        tape = compile_tape(tree)
        text = pretty(tree)

        def jet_fn(xs, ys):
            return Jet2(*eval_tape(tape, xs, ys, order=2))

        return cls(jet_fn, name or text, source=text, expr=tree)

    def jets(self, xs, ys) -> Jet2:
        xs = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
        ys = np.atleast_1d(np.asarray(ys, dtype=float)).ravel()
        return self._jet_fn(xs, ys)

    def jet(self, p) -> Jet2:
        j = self.jets([p[0]], [p[1]])
        return Jet2(*(float(c[0]) for c in j.astuple()))

    def __call__(self, p) -> float:
        return self.jet(p).v

    def __repr__(self):
        return f"ScalarField2({self.name!r})"


# --------------------------------------------------------------------------
# vector fields


@dataclass
class FieldEval:
    """Values and Jacobians of a vector field at a batch of points."""

    v1: np.ndarray
    v2: np.ndarray
    j11: np.ndarray
    j12: np.ndarray
    j21: np.ndarray
    j22: np.ndarray
    exact: bool = True  # False when the Jacobian came from finite differences

    def mat(self, i: int = 0) -> Mat2:
        return Mat2(float(self.j11[i]), float(self.j12[i]), float(self.j21[i]), float(self.j22[i]))

    def value(self, i: int = 0) -> tuple[float, float]:
        return float(self.v1[i]), float(self.v2[i])


@dataclass
class VectorField2:
    """Planar vector field ``F: R^2 -> R^2`` with Jacobians.

    ``tag`` records how it was built: ``closed-form``, ``gradient``,
    ``saddle``, ``sum``, ``scaled`` or ``shifted``.
    """

    tag: str
    name: str
    eval_fn: Callable = field(repr=False)
    parts: tuple = field(default=(), repr=False)

    def evaluate(self, xs, ys) -> FieldEval:
        xs = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
        ys = np.atleast_1d(np.asarray(ys, dtype=float)).ravel()
        return self.eval_fn(xs, ys)

    def __call__(self, p) -> tuple[float, float]:
        return self.evaluate([p[0]], [p[1]]).value(0)

    def jacobian(self, p) -> Mat2:
        return self.evaluate([p[0]], [p[1]]).mat(0)

    @classmethod
    def closed_form(cls, fn: Callable, name: str, jac: Callable | None = None) -> "VectorField2":
        """Wrap ``fn(xs, ys) -> (v1, v2)``.

        Without ``jac`` the Jacobian is taken by central differences with
        step ``cbrt(eps) * max(1, |coordinate|)`` and flagged inexact.
        """

        def eval_fn(xs, ys):
            v1, v2 = (np.broadcast_to(np.asarray(c, dtype=float), xs.shape).copy()
                      for c in fn(xs, ys))
            if jac is not None:
                j = [np.broadcast_to(np.asarray(c, dtype=float), xs.shape).copy()
                     for c in jac(xs, ys)]
                return FieldEval(v1, v2, *j, exact=True)
            hx = FD_STEP * np.maximum(1.0, np.abs(xs))
            hy = FD_STEP * np.maximum(1.0, np.abs(ys))
            a1, a2 = fn(xs + hx, ys)
            b1, b2 = fn(xs - hx, ys)
            c1, c2 = fn(xs, ys + hy)
            d1, d2 = fn(xs, ys - hy)
            return FieldEval(v1, v2,
                             (np.asarray(a1) - b1) / (2 * hx), (np.asarray(c1) - d1) / (2 * hy),
                             (np.asarray(a2) - b2) / (2 * hx), (np.asarray(c2) - d2) / (2 * hy),
                             exact=False)

        return cls("closed-form", name, eval_fn)


def gradient_field(f: ScalarField2) -> VectorField2:
    """``(f_x, f_y)``; its Jacobian is the Hessian and symmetric by construction."""

    def eval_fn(xs, ys):
        j = f.jets(xs, ys)
        return FieldEval(j.gx, j.gy, j.hxx, j.hxy, j.hxy, j.hyy)

    return VectorField2("gradient", f"grad({f.name})", eval_fn, (f,))


def saddle_field(f: ScalarField2) -> VectorField2:
    """``(f_x, -f_y)`` with Jacobian ``[[f_xx, f_xy], [-f_xy, -f_yy]]``."""

    def eval_fn(xs, ys):
        j = f.jets(xs, ys)
        return FieldEval(j.gx, -j.gy, j.hxx, j.hxy, -j.hxy, -j.hyy)

    return VectorField2("saddle", f"saddle({f.name})", eval_fn, (f,))


def add(F: VectorField2, G: VectorField2) -> VectorField2:
    def eval_fn(xs, ys):
        a, b = F.evaluate(xs, ys), G.evaluate(xs, ys)
        return FieldEval(a.v1 + b.v1, a.v2 + b.v2, a.j11 + b.j11, a.j12 + b.j12,
                         a.j21 + b.j21, a.j22 + b.j22, exact=a.exact and b.exact)

    return VectorField2("sum", f"({F.name} + {G.name})", eval_fn, (F, G))


def scale(F: VectorField2, c: float) -> VectorField2:
    c = float(c)

    def eval_fn(xs, ys):
        a = F.evaluate(xs, ys)
        return FieldEval(c * a.v1, c * a.v2, c * a.j11, c * a.j12, c * a.j21, c * a.j22,
                         exact=a.exact)

    return VectorField2("scaled", f"{c!r}*{F.name}", eval_fn, (F,))


def shift(F: VectorField2, b) -> VectorField2:
    b1, b2 = float(b[0]), float(b[1])

    def eval_fn(xs, ys):
        a = F.evaluate(xs, ys)
        return FieldEval(a.v1 + b1, a.v2 + b2, a.j11, a.j12, a.j21, a.j22, exact=a.exact)

    return VectorField2("shifted", f"({F.name} + ({b1!r}, {b2!r}))", eval_fn, (F,))


def jacobian(F: VectorField2, p) -> Mat2:
    return F.jacobian(p)


# --------------------------------------------------------------------------
# built-in operators

F_PLUS_EXPR = "x^2/2 + sin(x)*sin(y) - y^2/2"
F_MINUS_EXPR = "x^2/2 - sin(x)*sin(y) - y^2/2"


def f_plus() -> ScalarField2:
    return ScalarField2.from_expr(F_PLUS_EXPR, name="f_plus")


def f_minus() -> ScalarField2:
    return ScalarField2.from_expr(F_MINUS_EXPR, name="f_minus")


def F_plus() -> VectorField2:
    F = saddle_field(f_plus())
    F.name = "F_plus"
    return F


def F_minus() -> VectorField2:
    F = saddle_field(f_minus())
    F.name = "F_minus"
    return F


def F_plus_closed() -> VectorField2:
    """Hand-coded ``(x + cos x sin y, y - sin x cos y)``; guards the expression route."""

    def fn(x, y):
        return x + np.cos(x) * np.sin(y), y - np.sin(x) * np.cos(y)

    def jac(x, y):
        s, c = np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)
        return 1.0 - s, c, -c, 1.0 + s

    return VectorField2.closed_form(fn, "F_plus_closed", jac)


def F_minus_closed() -> VectorField2:
    def fn(x, y):
        return x - np.cos(x) * np.sin(y), y + np.sin(x) * np.cos(y)

    def jac(x, y):
        s, c = np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)
        return 1.0 + s, -c, c, 1.0 - s

    return VectorField2.closed_form(fn, "F_minus_closed", jac)


def identity_field() -> VectorField2:
    return VectorField2.closed_form(lambda x, y: (x, y), "identity",
                                    lambda x, y: (1.0, 0.0, 0.0, 1.0))


def skew_affine_field(a: float, b=(0.0, 0.0)) -> VectorField2:
    """``z -> A z + b`` with ``A = [[0, a], [-a, 0]]``."""
    a, b1, b2 = float(a), float(b[0]), float(b[1])
    return VectorField2.closed_form(
        lambda x, y: (a * y + b1, -a * x + b2),
        f"skew({a!r}; {b1!r}, {b2!r})",
        lambda x, y: (0.0, a, -a, 0.0),
    )


def constant_field(c) -> VectorField2:
    c1, c2 = float(c[0]), float(c[1])
    return VectorField2.closed_form(lambda x, y: (c1, c2), f"const({c1!r}, {c2!r})",
                                    lambda x, y: (0.0, 0.0, 0.0, 0.0))


def builtin_operator(name: str) -> VectorField2:
    """Look up ``fplus``, ``fminus``, ``sum`` or ``identity``."""
    if name == "fplus":
        return F_plus()
    if name == "fminus":
        return F_minus()
    if name == "sum":
        F = add(F_plus(), F_minus())
        F.name = "F_plus + F_minus"
        return F
    if name == "identity":
        return identity_field()
    raise KeyError(f"unknown built-in operator {name!r}")
