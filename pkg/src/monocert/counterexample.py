"""The two-operator family built from a coupling term u(x, y).

For ``f_pm = x^2/2 +- u - y^2/2`` the saddle fields ``F_plus`` and
``F_minus`` are monotone whenever ``|u_xx|, |u_yy| <= 1``; their sum is
``2z``, the gradient of ``x^2 + y^2``.  If ``u_xy`` is nonconstant,
neither saddle field minus any skew-affine map is integrable.
:func:`refute_additivity` runs every one of these checks on a grid and
aggregates them into a single verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certify import (
    DEFAULT_PAIRS,
    SCHEMA_VERSION,
    SCOPE,
    TOL_EXACT,
    TOL_QUAD,
    AffinityClassification,
    Certificate,
    NotAGradientError,
    PotentialTable,
    RefutationWitness,
    _check,
    _indeterminate,
    _pick,
    certify_convex_concave,
    certify_gradient,
    certify_monotone,
    classify_affinity,
    dumps,
    reconstruct_potential,
    refute_skew_affine,
)
from .expr import BinOp, DomainError, Expr, Num, Pow, Var, parse, pretty
from .fields import (
    DEFAULT_GRID,
    DEFAULT_REGION,
    GridSpec,
    Region,
    ScalarField2,
    VectorField2,
    add,
    saddle_field,
)

VERDICT_CERTIFIED = "counterexample certified"
VERDICT_FAILED = "not certified"
VERDICT_INDETERMINATE = "indeterminate"
N_STAGES = 12

_HALF_X2 = BinOp("/", Pow(Var("x"), 2), Num(2.0))
_HALF_Y2 = BinOp("/", Pow(Var("y"), 2), Num(2.0))


@dataclass
class FamilyPair:
    u: ScalarField2
    f_plus: ScalarField2
    f_minus: ScalarField2
    F_plus: VectorField2
    F_minus: VectorField2

    @property
    def total(self) -> VectorField2:
        F = add(self.F_plus, self.F_minus)
        F.name = "F_plus + F_minus"
        return F


def family_expr(u: Expr, sign: str) -> Expr:
    """``x^2/2 + u - y^2/2`` (sign ``+``) or ``x^2/2 - u - y^2/2``."""
    return BinOp("-", BinOp(sign, _HALF_X2, u), _HALF_Y2)


def make_pair(u_text) -> FamilyPair:
    """Build ``F_plus``, ``F_minus`` as saddle fields of ``x^2/2 +- u - y^2/2``.

    ``u_text`` may be expression text or a parsed tree.
    """
    u_tree = parse(u_text) if isinstance(u_text, str) else u_text
    u = ScalarField2.from_expr(u_tree, name=f"u = {pretty(u_tree)}")
    fp = ScalarField2.from_expr(family_expr(u_tree, "+"), name="f_plus")
    fm = ScalarField2.from_expr(family_expr(u_tree, "-"), name="f_minus")
    Fp, Fm = saddle_field(fp), saddle_field(fm)
    Fp.name, Fm.name = "F_plus", "F_minus"
    return FamilyPair(u, fp, fm, Fp, Fm)


def check_remark_bounds(u: ScalarField2, region: Region = DEFAULT_REGION,
                        grid: GridSpec = DEFAULT_GRID, tol: float = TOL_EXACT) -> Certificate:
    """``|u_xx| <= 1``, ``|u_yy| <= 1`` and nonconstant ``u_xy`` on the grid."""
    tols = {"tol": tol}
    try:
        xs, ys = grid.points(region)
        j = u.jets(xs, ys)
    except DomainError as err:
        return _indeterminate("family-hypotheses", u.name, region, grid, err, tols)
    c = region.center
    axx, ayy = np.abs(j.hxx), np.abs(j.hyy)
    i = _pick(axx, xs, ys, c, "max")
    k = _pick(ayy, xs, ys, c, "max")
    lo = _pick(j.hxy, xs, ys, c, "min")
    hi = _pick(j.hxy, xs, ys, c, "max")
    spread = float(j.hxy[hi] - j.hxy[lo])
    checks = [
        _check("uxx_bound", "max_abs_uxx", axx[i], "<=", 1.0 + tol, (xs[i], ys[i])),
        _check("uyy_bound", "max_abs_uyy", ayy[k], "<=", 1.0 + tol, (xs[k], ys[k])),
        _check("uxy_nonconstant", "uxy_spread", spread, ">", tol, (xs[hi], ys[hi]),
               p_min=[float(xs[lo]), float(ys[lo])], uxy_min=float(j.hxy[lo]),
               uxy_max=float(j.hxy[hi])),
    ]
    notes = []
    if not checks[2].passed:
        notes.append("degenerate family member: u_xy is constant on the grid")
    return Certificate("family-hypotheses", u.name, region, grid, checks, tols,
                       notes=notes, grid_metric=("uxy", xs, ys, j.hxy))


@dataclass
class PipelineConfig:
    tol: float = TOL_EXACT  # jet-exact checks
    quad_tol: float = TOL_QUAD  # potential reconstruction and affinity
    quad_step: float = 1e-3
    refute_threshold: float = TOL_QUAD
    pair_samples: int = DEFAULT_PAIRS
    seed: int = 0
    anchor: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "quad_tol": self.quad_tol,
            "quad_step": self.quad_step,
            "refute_threshold": self.refute_threshold,
            "pair_samples": self.pair_samples,
            "seed": self.seed,
            "anchor": list(self.anchor) if self.anchor is not None else None,
        }


@dataclass
class CounterexampleCertificate:
    u_text: str
    region: Region
    grid: GridSpec
    config: PipelineConfig
    bounds: Certificate | None = None
    convex_concave: dict = field(default_factory=dict)  # "f_plus"/"f_minus" -> Certificate
    monotone: dict = field(default_factory=dict)  # "F_plus"/"F_minus" -> Certificate
    sum_gradient: Certificate | None = None
    potential: PotentialTable | None = None
    potential_error: float | None = None  # sup |phi - (x^2 + y^2 - anchor value)| on the grid
    affinity: AffinityClassification | None = None
    refutations: dict = field(default_factory=dict)  # "F_plus"/"F_minus" -> RefutationWitness
    error: str | None = None

    def stages(self) -> list[tuple[str, bool]]:
        """``(stage id, passed)`` in pipeline order."""
        out = []
        if self.bounds is not None:
            out += [(f"family_hypotheses.{c.id}", c.passed) for c in self.bounds.checks]
        for k, c in self.convex_concave.items():
            out.append((f"convex_concave.{k}", c.passed))
        for k, c in self.monotone.items():
            out.append((f"monotone.{k}", c.passed))
        if self.sum_gradient is not None:
            out.append(("sum.curl_free", self.sum_gradient.passed))
        if self.potential is not None:
            out.append(("sum.potential", self.potential.gradient_ok
                         and self.potential_error is not None
                         and self.potential_error <= self.config.quad_tol))
        if self.affinity is not None:
            out.append(("sum.non_affine", not self.affinity.affine))
        for k, r in self.refutations.items():
            out.append((f"skew_refutation.{k}", r.refuted))
        return out

    @property
    def verdict(self) -> str:
        if self.error is not None:
            return VERDICT_INDETERMINATE
        stages = self.stages()
        if len(stages) == N_STAGES and all(p for _, p in stages):
            return VERDICT_CERTIFIED
        return VERDICT_FAILED

    @property
    def certified(self) -> bool:
        return self.verdict == VERDICT_CERTIFIED

    @property
    def first_failure(self) -> str | None:
        for name, ok in self.stages():
            if not ok:
                return name
        return None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "counterexample_certificate",
            "u": self.u_text,
            "region": self.region.to_dict(),
            "grid": self.grid.to_dict(),
            "config": self.config.to_dict(),
            "verdict": self.verdict,
            "first_failure": self.first_failure,
            "error": self.error,
            "stages": [{"id": n, "passed": p} for n, p in self.stages()],
            "family_hypotheses": self.bounds.to_dict() if self.bounds else None,
            "convex_concave": {k: c.to_dict() for k, c in self.convex_concave.items()},
            "monotone": {k: c.to_dict() for k, c in self.monotone.items()},
            "sum": {
                "gradient": self.sum_gradient.to_dict() if self.sum_gradient else None,
                "potential": self.potential.to_dict() if self.potential else None,
                "potential_error_vs_x2_plus_y2": self.potential_error,
                "affinity": self.affinity.to_dict() if self.affinity else None,
            },
            "skew_refutation": {k: r.to_dict() for k, r in self.refutations.items()},
            "verified": [
                "bounds on u_xx, u_yy and nonconstancy of u_xy at grid points",
                "separable convex-concavity of f_plus and f_minus at grid points",
                "monotonicity of F_plus and F_minus (Jacobian and random pairs)",
                "F_plus + F_minus is curl-free; its potential matches x^2 + y^2; it is non-affine",
                "no skew-affine map leaves F_plus or F_minus integrable on the grid",
            ],
            "not_verified": [
                "acyclicity of the acyclic parts of F_plus, F_minus (not explicitly computable)",
                "global bounds and smoothness of u outside the region",
            ],
            "scope": SCOPE,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write_csvs(self, directory) -> list:
        """One ``x,y,metric`` CSV per grid stage; returns the paths written."""
        from pathlib import Path

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        written = []
        certs = [("family_uxy", self.bounds)]
        certs += [(f"convex_concave_{k}", c) for k, c in self.convex_concave.items()]
        certs += [(f"monotone_{k}", c) for k, c in self.monotone.items()]
        certs += [("sum_asymmetry", self.sum_gradient)]
        for name, cert in certs:
            if cert is not None and cert.grid_metric is not None:
                p = d / f"{name}.csv"
                cert.write_csv(p)
                written.append(p)
        if self.potential is not None:
            p = d / "sum_potential.csv"
            self.potential.write_csv(p)
            written.append(p)
        return written


def refute_additivity(u_text, region: Region = DEFAULT_REGION, grid: GridSpec = DEFAULT_GRID,
                      config: PipelineConfig | None = None) -> CounterexampleCertificate:
    """Run the full pipeline for coupling term ``u``.

    Stages, in order: family hypotheses on ``u``; separable
    convex-concavity of ``f_plus``, ``f_minus``; monotonicity of
    ``F_plus``, ``F_minus``; curl-freeness, potential and non-affinity of
    their sum; skew-affine refutation for each field.  A domain error in
    any stage makes the certificate indeterminate.
    """
    config = config or PipelineConfig()
    pair = make_pair(u_text)
    text = pretty(pair.u.expr)
    cert = CounterexampleCertificate(text, region, grid, config)
    try:
        cert.bounds = check_remark_bounds(pair.u, region, grid, config.tol)
        for key, f in (("f_plus", pair.f_plus), ("f_minus", pair.f_minus)):
            cert.convex_concave[key] = certify_convex_concave(f, region, grid, config.tol)
        for key, F in (("F_plus", pair.F_plus), ("F_minus", pair.F_minus)):
            cert.monotone[key] = certify_monotone(F, region, grid, config.pair_samples,
                                                  config.seed, config.tol)
        total = pair.total
        cert.sum_gradient = certify_gradient(total, region, grid, config.tol)
        indeterminate = [c for c in [cert.bounds, *cert.convex_concave.values(),
                                     *cert.monotone.values(), cert.sum_gradient]
                         if c.indeterminate]
        if indeterminate:
            cert.error = indeterminate[0].checks[0].details["error"]
            return cert
        if cert.sum_gradient.passed:
            table = reconstruct_potential(total, region, grid, config.anchor, config.quad_step,
                                          config.quad_tol, config.tol)
            cert.potential = table
            X, Y = np.meshgrid(table.xs, table.ys, indexing="ij")
            ax, ay = table.anchor
            expected = (X * X + Y * Y) - (ax * ax + ay * ay)
            cert.potential_error = float(np.max(np.abs(table.values - expected)))
            cert.affinity = classify_affinity(table, total, config.quad_tol)
        for key, F in (("F_plus", pair.F_plus), ("F_minus", pair.F_minus)):
            cert.refutations[key] = refute_skew_affine(F, region, grid,
                                                       threshold=config.refute_threshold)
    except (DomainError, NotAGradientError) as err:
        cert.error = str(err)
    return cert


def random_admissible_u(seed: int, region: Region = DEFAULT_REGION, degree: int = 3,
                        n_terms: int = 6, margin: float = 0.9, oversample: int = 4) -> str:
    """Seeded trigonometric polynomial of degree <= ``degree`` meeting the bounds.

    Draws ``n_terms`` products ``c * X(j*x) * Y(k*y)`` (``X``, ``Y`` in
    sin/cos, ``0 <= j, k <= degree``) from ``default_rng(seed)``, at least
    one of them mixed, then rescales so that ``|u_xx|, |u_yy| <= margin``
    on a grid ``oversample`` times finer than the default one.
    """
    rng = np.random.default_rng(seed)
    basis = []
    for j in range(degree + 1):
        for k in range(degree + 1):
            for bx in ("cos", "sin"):
                for by in ("cos", "sin"):
                    if (j == 0 and bx == "sin") or (k == 0 and by == "sin") or j + k == 0:
                        continue
                    fx = "1" if j == 0 else f"{bx}({j}*x)"
                    fy = "1" if k == 0 else f"{by}({k}*y)"
                    basis.append((j > 0 and k > 0, f"{fx}*{fy}"))
    fine = GridSpec(128 * oversample + 1, 128 * oversample + 1)
    xs, ys = fine.points(region)
    while True:
        picks = rng.choice(len(basis), size=n_terms, replace=False)
        if not any(basis[i][0] for i in picks):
            continue
        terms = [(float(rng.normal()), basis[i][1]) for i in sorted(picks)]
        jets = ScalarField2.from_expr(" + ".join(f"{c!r}*{t}" for c, t in terms)).jets(xs, ys)
        m = float(max(np.max(np.abs(jets.hxx)), np.max(np.abs(jets.hyy))))
        if m > 0 and (np.max(jets.hxy) - np.min(jets.hxy)) / m > 1e-2:
            s = margin / m
            return " + ".join(f"{c * s!r}*{t}" for c, t in terms)


__all__ = [
    "FamilyPair",
    "PipelineConfig",
    "CounterexampleCertificate",
    "make_pair",
    "check_remark_bounds",
    "refute_additivity",
    "random_admissible_u",
    "VERDICT_CERTIFIED",
    "VERDICT_FAILED",
    "VERDICT_INDETERMINATE",
]
