"""Grid certification of monotonicity, convexity and gradient structure.

Every check here is evidence at sampled points, not a proof: a passing
certificate says the inequality held at each lattice point (and each
random pair) to the recorded tolerance.  Certificates carry region, grid,
tolerances and seed so any claim can be re-run and falsified.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import DomainError
from .fields import (
    DEFAULT_GRID,
    DEFAULT_REGION,
    GridSpec,
    Region,
    ScalarField2,
    VectorField2,
    gradient_field,
    sym_min_eig_arrays,
)

SCHEMA_VERSION = 1

TOL_EXACT = 1e-9  # jet-exact quantities
TOL_QUAD = 1e-6  # quadrature / finite-difference quantities
DEFAULT_PAIRS = 10_000

SCOPE = ("numerical evidence: each check held at the sampled grid points "
         "(and seeded random pairs) to the stated tolerance; not an analytic proof")


# --------------------------------------------------------------------------
# records


def _num(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    return v


def dumps(obj: dict) -> str:
    """Serialise a report dict; floats use the shortest round-trip repr."""
    return json.dumps(_num(obj), indent=2, allow_nan=False) + "\n"


def write_grid_csv(path, xs, ys, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "metric"])
        for x, y, v in zip(np.ravel(xs), np.ravel(ys), np.ravel(values)):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


@dataclass
class Check:
    id: str
    metric: str
    observed: float | None
    threshold: float | None
    comparison: str  # how observed is compared with threshold: ">=", "<=", ">"
    passed: bool
    witness: tuple | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "metric": self.metric,
            "observed": self.observed,
            "comparison": self.comparison,
            "threshold": self.threshold,
            "passed": self.passed,
            "witness": list(self.witness) if self.witness is not None else None,
            "details": self.details,
        }


def _check(id, metric, observed, comparison, threshold, witness=None, **details) -> Check:
    ops: dict[str, Callable] = {
        ">=": lambda a, b: a >= b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
    }
    observed = float(observed)
    passed = bool(math.isfinite(observed) and ops[comparison](observed, threshold))
    if witness is not None:
        witness = (float(witness[0]), float(witness[1]))
    return Check(id, metric, observed, float(threshold), comparison, passed, witness, details)


@dataclass
class Certificate:
    property: str
    subject: str
    region: Region
    grid: GridSpec
    checks: list[Check]
    tolerances: dict
    seed: int | None = None
    notes: list[str] = field(default_factory=list)
    indeterminate: bool = False
    grid_metric: tuple | None = field(default=None, repr=False)  # (name, xs, ys, values)

    @property
    def status(self) -> str:
        if self.indeterminate:
            return "indeterminate"
        return "pass" if self.checks and all(c.passed for c in self.checks) else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def check(self, id: str) -> Check:
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def failed_checks(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "certificate",
            "property": self.property,
            "subject": self.subject,
            "status": self.status,
            "passed": self.passed,
            "region": self.region.to_dict(),
            "grid": self.grid.to_dict(),
            "tolerances": self.tolerances,
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "scope": SCOPE,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write_csv(self, path) -> None:
        if self.grid_metric is None:
            raise ValueError(f"{self.property} certificate has no grid metric")
        _, xs, ys, vals = self.grid_metric
        write_grid_csv(path, xs, ys, vals)


def _indeterminate(prop, subject, region, grid, err: DomainError, tolerances, seed=None):
    check = Check("evaluation", "domain", None, None, "ok", False,
                  tuple(err.point) if err.point is not None else None,
                  {"error": str(err), "subexpression": err.subexpr})
    return Certificate(prop, subject, region, grid, [check], tolerances, seed,
                       notes=["evaluation left the field's domain"], indeterminate=True)


# --------------------------------------------------------------------------
# sampling helpers


def _pick(values, xs, ys, center, mode: str) -> int:
    """Index of the extreme value; exact ties go to the point nearest ``center``."""
    target = values.min() if mode == "min" else values.max()
    ties = np.flatnonzero(values == target)
    d = (xs[ties] - center[0]) ** 2 + (ys[ties] - center[1]) ** 2
    return int(ties[np.argmin(d)])


def pair_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Four uniforms in [0, 1) per pair index, counter-based on ``(seed, index)``.

    Pair ``i`` uses Philox block ``i`` under key ``seed``, so any split of
    ``range(start, stop)`` across workers yields the same numbers.
    """
    bg = np.random.Philox(key=int(seed), counter=int(start))
    raw = bg.random_raw(4 * (stop - start)).reshape(-1, 4)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def random_pairs(region: Region, n: int, seed: int):
    u = pair_uniforms(seed, 0, n)
    w, h = region.xmax - region.xmin, region.ymax - region.ymin
    z = np.column_stack([region.xmin + u[:, 0] * w, region.ymin + u[:, 1] * h])
    zp = np.column_stack([region.xmin + u[:, 2] * w, region.ymin + u[:, 3] * h])
    return z, zp


def _grid_eval(F: VectorField2, region, grid):
    xs, ys = grid.points(region)
    return xs, ys, F.evaluate(xs, ys)


# --------------------------------------------------------------------------
# monotonicity / convexity


def _monotone_checks(F, region, grid, pair_samples, seed, tol):
    xs, ys, ev = _grid_eval(F, region, grid)
    eig = sym_min_eig_arrays(ev.j11, ev.j12, ev.j21, ev.j22)
    i = _pick(eig, xs, ys, region.center, "min")
    checks = [_check("jacobian_psd", "min_sym_eig", eig[i], ">=", -tol, (xs[i], ys[i]),
                     jacobian_exact=ev.exact)]
    if pair_samples > 0:
        z, zp = random_pairs(region, pair_samples, seed)
        a = F.evaluate(z[:, 0], z[:, 1])
        b = F.evaluate(zp[:, 0], zp[:, 1])
        dx, dy = z[:, 0] - zp[:, 0], z[:, 1] - zp[:, 1]
        inner = (a.v1 - b.v1) * dx + (a.v2 - b.v2) * dy
        sq = dx * dx + dy * dy
        ok = sq > 0
        ratio = np.where(ok, inner / np.where(ok, sq, 1.0), np.inf)
        k = int(np.argmin(ratio))
        checks.append(_check(
            "pairwise", "min_normalized_inner_product", ratio[k], ">=", -tol, z[k],
            partner=[float(zp[k, 0]), float(zp[k, 1])], inner_product=float(inner[k]),
            pairs=int(pair_samples)))
    return checks, (xs, ys, eig)


def certify_monotone(F: VectorField2, region: Region = DEFAULT_REGION,
                     grid: GridSpec = DEFAULT_GRID, pair_samples: int = DEFAULT_PAIRS,
                     seed: int = 0, tol: float = TOL_EXACT) -> Certificate:
    """Check ``<F(z) - F(z'), z - z'> >= 0`` two ways.

    ``jacobian_psd`` takes the smallest eigenvalue of the Jacobian's
    symmetric part over the grid; ``pairwise`` evaluates the defining
    inequality on seeded random pairs, normalised by ``|z - z'|^2``.
    """
    tols = {"tol": tol}
    try:
        checks, (xs, ys, eig) = _monotone_checks(F, region, grid, pair_samples, seed, tol)
    except DomainError as err:
        return _indeterminate("monotone", F.name, region, grid, err, tols, seed)
    return Certificate("monotone", F.name, region, grid, checks, tols, seed,
                       grid_metric=("min_sym_eig", xs, ys, eig))


def certify_convex(f: ScalarField2, region: Region = DEFAULT_REGION,
                   grid: GridSpec = DEFAULT_GRID, tol: float = TOL_EXACT,
                   pair_samples: int = DEFAULT_PAIRS, seed: int = 0) -> Certificate:
    """Hessian PSD on the grid, cross-checked by monotonicity of the gradient.

    Convexity of a C^1 function is equivalent to monotonicity of its
    gradient, so the certificate also runs :func:`certify_monotone` on
    ``gradient_field(f)`` and passes only when both routes pass.
    """
    tols = {"tol": tol}
    try:
        xs, ys = grid.points(region)
        j = f.jets(xs, ys)
        eig = sym_min_eig_arrays(j.hxx, j.hxy, j.hxy, j.hyy)
        i = _pick(eig, xs, ys, region.center, "min")
        hess = _check("hessian_psd", "min_hessian_eig", eig[i], ">=", -tol, (xs[i], ys[i]))
    except DomainError as err:
        return _indeterminate("convex", f.name, region, grid, err, tols, seed)
    mono = certify_monotone(gradient_field(f), region, grid, pair_samples, seed, tol)
    if mono.indeterminate:
        return _indeterminate("convex", f.name, region, grid, DomainError(
            mono.checks[0].details["error"], mono.checks[0].witness), tols, seed)
    observed = min(c.observed for c in mono.checks)
    cross = Check("gradient_monotone", "min_gradient_monotone_metric", observed, -tol, ">=",
                  mono.passed, mono.failed_checks()[0].witness if not mono.passed else None,
                  {c.id: c.observed for c in mono.checks})
    return Certificate("convex", f.name, region, grid, [hess, cross], tols, seed,
                       grid_metric=("min_hessian_eig", xs, ys, eig))


def certify_convex_concave(f: ScalarField2, region: Region = DEFAULT_REGION,
                           grid: GridSpec = DEFAULT_GRID, tol: float = TOL_EXACT) -> Certificate:
    """Separable criterion: ``f_xx >= 0`` and ``f_yy <= 0`` at every grid point.

    Sufficient only; a field like ``x*y`` passes with both partials zero.
    """
    tols = {"tol": tol}
    try:
        xs, ys = grid.points(region)
        j = f.jets(xs, ys)
    except DomainError as err:
        return _indeterminate("convex-concave", f.name, region, grid, err, tols)
    i = _pick(j.hxx, xs, ys, region.center, "min")
    k = _pick(j.hyy, xs, ys, region.center, "max")
    checks = [
        _check("fxx_min", "min_fxx", j.hxx[i], ">=", -tol, (xs[i], ys[i])),
        _check("fyy_max", "max_fyy", j.hyy[k], "<=", tol, (xs[k], ys[k])),
    ]
    return Certificate("convex-concave", f.name, region, grid, checks, tols,
                       notes=["separable criterion (sufficient, not necessary)"],
                       grid_metric=("min_fxx", xs, ys, j.hxx))


# --------------------------------------------------------------------------
# skew-affine fit and refutation


@dataclass
class SkewAffineFit:
    """Least-squares ``F(x, y) ~ (a*y + b1, -a*x + b2)`` over a grid."""

    a: float
    b1: float
    b2: float
    rms_residual: float
    max_residual: float
    subject: str = ""
    region: Region | None = None
    grid: GridSpec | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "skew_affine_fit",
            "subject": self.subject,
            "region": self.region.to_dict() if self.region else None,
            "grid": self.grid.to_dict() if self.grid else None,
            "a": self.a,
            "b1": self.b1,
            "b2": self.b2,
            "rms_residual": self.rms_residual,
            "max_residual": self.max_residual,
        }


def fit_skew_affine(F: VectorField2, region: Region = DEFAULT_REGION,
                    grid: GridSpec = DEFAULT_GRID) -> SkewAffineFit:
    xs, ys, ev = _grid_eval(F, region, grid)
    # centred normal equations: the offsets decouple once coordinates are centred
    mx, my = xs.mean(), ys.mean()
    m1, m2 = ev.v1.mean(), ev.v2.mean()
    cx, cy = xs - mx, ys - my
    den = np.dot(cy, cy) + np.dot(cx, cx)
    a = (np.dot(cy, ev.v1 - m1) - np.dot(cx, ev.v2 - m2)) / den
    b1 = m1 - a * my
    b2 = m2 + a * mx
    r = np.hypot(ev.v1 - (a * ys + b1), ev.v2 - (-a * xs + b2))
    return SkewAffineFit(float(a), float(b1), float(b2), float(np.sqrt(np.mean(r * r))),
                         float(r.max()), F.name, region, grid)


@dataclass
class RefutationWitness:
    """Minimax over ``a`` of the integrability residual of ``F - skew(a)``."""

    best_a: float
    min_sup_residual: float
    p_lo: tuple
    p_hi: tuple
    asym_lo: float
    asym_hi: float
    threshold: float
    a_search: tuple
    subject: str = ""
    region: Region | None = None
    grid: GridSpec | None = None

    @property
    def refuted(self) -> bool:
        return self.min_sup_residual > self.threshold

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "skew_affine_refutation",
            "subject": self.subject,
            "region": self.region.to_dict() if self.region else None,
            "grid": self.grid.to_dict() if self.grid else None,
            "refuted": self.refuted,
            "best_a": self.best_a,
            "min_sup_residual": self.min_sup_residual,
            "threshold": self.threshold,
            "a_search": list(self.a_search),
            "asymmetry_min": {"value": self.asym_lo, "point": list(self.p_lo)},
            "asymmetry_max": {"value": self.asym_hi, "point": list(self.p_hi)},
        }


INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, lo, hi, tol=1e-14, max_iter=200):
    a, b = lo, hi
    c, d = b - INVPHI * (b - a), a + INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def refute_skew_affine(F: VectorField2, region: Region = DEFAULT_REGION,
                       grid: GridSpec = DEFAULT_GRID, a_search: tuple | None = None,
                       threshold: float = TOL_QUAD, scan_points: int = 257) -> RefutationWitness:
    """Show no skew-affine ``S`` leaves ``F - S`` integrable on the grid.

    For ``S = skew(a) z + b`` the field ``F - S`` has mixed-partial gap
    ``J12 - J21 - 2a``.  The sup over the grid is minimised over ``a``
    (coarse scan, then golden section); the refutation succeeds when even
    the best ``a`` leaves a gap above ``threshold``.
    """
    xs, ys, ev = _grid_eval(F, region, grid)
    asym = ev.j12 - ev.j21
    if a_search is None:
        amax = float(np.max(np.abs(ev.j12)))
        a_search = (-(amax + 1.0), amax + 1.0)
    lo, hi = float(a_search[0]), float(a_search[1])
    if not lo <= hi:
        raise ValueError(f"empty a-search interval [{lo!r}, {hi!r}]")

    def sup_residual(a):
        return float(np.max(np.abs(asym - 2.0 * a)))

    cand = np.linspace(lo, hi, scan_points) if hi > lo else np.array([lo])
    vals = np.array([sup_residual(a) for a in cand])
    k = int(np.argmin(vals))
    best_a, best = float(cand[k]), float(vals[k])
    if hi > lo:
        a_ref = _golden_min(sup_residual, float(cand[max(k - 1, 0)]),
                            float(cand[min(k + 1, len(cand) - 1)]))
        r_ref = sup_residual(a_ref)
        if r_ref <= best:
            best_a, best = a_ref, r_ref
    i = _pick(asym, xs, ys, region.center, "min")
    j = _pick(asym, xs, ys, region.center, "max")
    return RefutationWitness(best_a, best, (float(xs[i]), float(ys[i])),
                             (float(xs[j]), float(ys[j])), float(asym[i]), float(asym[j]),
                             float(threshold), (lo, hi), F.name, region, grid)


# --------------------------------------------------------------------------
# gradient structure


def certify_gradient(F: VectorField2, region: Region = DEFAULT_REGION,
                     grid: GridSpec = DEFAULT_GRID, tol: float = TOL_EXACT) -> Certificate:
    """Curl-free check: ``max |J12 - J21| <= tol`` over the grid."""
    tols = {"tol": tol}
    try:
        xs, ys, ev = _grid_eval(F, region, grid)
    except DomainError as err:
        return _indeterminate("gradient", F.name, region, grid, err, tols)
    asym = ev.j12 - ev.j21
    mag = np.abs(asym)
    i = _pick(mag, xs, ys, region.center, "max")
    check = _check("curl_free", "max_abs_asymmetry", mag[i], "<=", tol, (xs[i], ys[i]),
                   asymmetry=float(asym[i]), jacobian_exact=ev.exact)
    return Certificate("gradient", F.name, region, grid, [check], tols,
                       grid_metric=("asymmetry", xs, ys, asym))


class NotAGradientError(ValueError):
    def __init__(self, certificate: Certificate):
        self.certificate = certificate
        c = certificate.checks[0]
        super().__init__(f"field {certificate.subject!r} is not curl-free on the grid: "
                         f"{c.metric}={c.observed!r} > {c.threshold!r} at {c.witness}")


@dataclass
class PotentialTable:
    """Reconstructed potential on a grid, zero at the anchor."""

    subject: str
    region: Region
    grid: GridSpec
    anchor: tuple
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # shape (nx, ny)
    quad_step: float
    effective_step: float
    step_adjusted: bool
    gradient_mismatch: float | None
    tol: float

    @property
    def gradient_ok(self) -> bool:
        return self.gradient_mismatch is not None and self.gradient_mismatch <= self.tol

    def at(self, i: int, j: int) -> float:
        return float(self.values[i, j])

    def numerical_gradient(self):
        """Sixth-order central differences at points three or more cells from the edge."""
        return _six_point_gradient(self.values, self.xs, self.ys)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "potential_table",
            "subject": self.subject,
            "region": self.region.to_dict(),
            "grid": self.grid.to_dict(),
            "anchor": list(self.anchor),
            "quad_step": self.quad_step,
            "effective_step": self.effective_step,
            "step_adjusted": self.step_adjusted,
            "gradient_mismatch": self.gradient_mismatch,
            "tol": self.tol,
            "values_min": float(self.values.min()),
            "values_max": float(self.values.max()),
        }

    def write_csv(self, path) -> None:
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        write_grid_csv(path, X, Y, self.values)


_D6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def _six_point_gradient(values, xs, ys):
    nx, ny = values.shape
    if nx < 7 or ny < 7:
        return None
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    core = values[3:nx - 3, 3:ny - 3]
    gx = np.zeros_like(core)
    gy = np.zeros_like(core)
    for k, c in enumerate(_D6):
        if c:
            gx += c * values[k:nx - 6 + k, 3:ny - 3]
            gy += c * values[3:nx - 3, k:ny - 6 + k]
    return gx / hx, gy / hy, slice(3, nx - 3), slice(3, ny - 3)


def _simpson_nodes(breaks: np.ndarray, step: float):
    """Composite-Simpson nodes and weights for each interval between breakpoints.

    Each interval gets an even number of panels no wider than ``step``.
    Returns ``(nodes, weights, starts, effective_step)`` where ``starts``
    indexes the first node of each interval.
    """
    nodes, weights, starts = [], [], []
    eff, count = 0.0, 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(2, int(math.ceil((b - a) / step)))
        n += n % 2
        h = (b - a) / n
        eff = max(eff, h)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        nodes.append(np.linspace(a, b, n + 1))
        weights.append(w * h / 3.0)
        starts.append(count)
        count += n + 1
    return np.concatenate(nodes), np.concatenate(weights), np.array(starts), eff


def _leg_integrals(coords: np.ndarray, start: float, step: float):
    """Quadrature plan for the integrals from ``start`` to each of ``coords``."""
    breaks = np.unique(np.append(coords, start))
    nodes, w, starts, eff = _simpson_nodes(breaks, step)
    k0 = int(np.searchsorted(breaks, start))
    pos = np.searchsorted(breaks, coords)

    def integrate(samples: np.ndarray) -> np.ndarray:
        per_seg = np.add.reduceat(samples * w, starts, axis=-1)
        cum = np.cumsum(per_seg, axis=-1)
        cum = np.concatenate([np.zeros(cum.shape[:-1] + (1,)), cum], axis=-1)
        return cum[..., pos] - cum[..., k0:k0 + 1]

    return nodes, integrate, eff


def reconstruct_potential(F: VectorField2, region: Region = DEFAULT_REGION,
                          grid: GridSpec = DEFAULT_GRID, anchor=None,
                          quad_step: float = 1e-3, tol: float = TOL_QUAD,
                          curl_tol: float = TOL_EXACT) -> PotentialTable:
    """Line-integrate a curl-free field from ``anchor`` to every grid point.

    The path runs along x at the anchor's height, then along y.  Each leg
    is split at grid coordinates and integrated by composite Simpson with
    panels of at most ``quad_step``; when ``quad_step`` does not divide an
    interval the panel width is shrunk and ``step_adjusted`` is set.
    """
    if quad_step <= 0:
        raise ValueError("quad_step must be positive")
    anchor = region.center if anchor is None else (float(anchor[0]), float(anchor[1]))
    if not region.contains(anchor):
        raise ValueError(f"anchor {anchor} lies outside the region")
    cert = certify_gradient(F, region, grid, curl_tol)
    if not cert.passed:
        if cert.indeterminate:
            c = cert.checks[0]
            raise DomainError(c.details["error"], c.witness)
        raise NotAGradientError(cert)

    gxs, gys = grid.axes(region)
    x0, y0 = anchor
    xnodes, xint, effx = _leg_integrals(gxs, x0, quad_step)
    ynodes, yint, effy = _leg_integrals(gys, y0, quad_step)

    first = xint(F.evaluate(xnodes, np.full_like(xnodes, y0)).v1)  # (nx,)
    second = np.empty((len(gxs), len(gys)))
    batch = max(1, 400_000 // len(ynodes))
    for lo in range(0, len(gxs), batch):
        cols = gxs[lo:lo + batch]
        X = np.repeat(cols, len(ynodes))
        Y = np.tile(ynodes, len(cols))
        v2 = F.evaluate(X, Y).v2.reshape(len(cols), len(ynodes))
        second[lo:lo + batch] = yint(v2)
    values = first[:, None] + second

    eff = max(effx, effy)
    adjusted = not (math.isclose(effx, quad_step, rel_tol=1e-12)
                    and math.isclose(effy, quad_step, rel_tol=1e-12))
    mismatch = None
    g = _six_point_gradient(values, gxs, gys)
    if g is not None:
        gx, gy, si, sj = g
        X, Y = np.meshgrid(gxs[si], gys[sj], indexing="ij")
        ev = F.evaluate(X.ravel(), Y.ravel())
        mismatch = float(max(np.max(np.abs(gx.ravel() - ev.v1)),
                             np.max(np.abs(gy.ravel() - ev.v2))))
    return PotentialTable(F.name, region, grid, anchor, gxs, gys, values, float(quad_step),
                          float(eff), adjusted, mismatch, float(tol))


@dataclass
class AffinityClassification:
    affine: bool
    spread: tuple  # max - min of each gradient component over the grid
    component: int  # component with the larger spread (0 or 1)
    p_min: tuple
    p_max: tuple
    tol: float

    def to_dict(self) -> dict:
        return {
            "classification": "affine" if self.affine else "non-affine",
            "spread": list(self.spread),
            "component": self.component,
            "witness": {"p_min": list(self.p_min), "p_max": list(self.p_max)},
            "tol": self.tol,
        }


def classify_affinity(table: PotentialTable, F: VectorField2,
                      tol: float = TOL_QUAD) -> AffinityClassification:
    """Non-affine iff the gradient ``F`` varies by more than ``tol`` over the grid."""
    X, Y = np.meshgrid(table.xs, table.ys, indexing="ij")
    xs, ys = X.ravel(), Y.ravel()
    ev = F.evaluate(xs, ys)
    spreads, ends = [], []
    for comp in (ev.v1, ev.v2):
        i = _pick(comp, xs, ys, table.region.center, "min")
        j = _pick(comp, xs, ys, table.region.center, "max")
        spreads.append(float(comp[j] - comp[i]))
        ends.append(((float(xs[i]), float(ys[i])), (float(xs[j]), float(ys[j]))))
    c = int(spreads[1] > spreads[0])
    return AffinityClassification(max(spreads) <= tol, tuple(spreads), c, ends[c][0],
                                  ends[c][1], float(tol))
