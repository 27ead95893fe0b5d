import json
import math

import numpy as np
import pytest

from monocert.certify import certify_monotone, refute_skew_affine
from monocert.counterexample import (
    VERDICT_CERTIFIED,
    VERDICT_FAILED,
    VERDICT_INDETERMINATE,
    PipelineConfig,
    check_remark_bounds,
    make_pair,
    random_admissible_u,
    refute_additivity,
)
from monocert.fields import F_plus_closed, GridSpec, Region, ScalarField2, identity_field

from conftest import GRID, PI_REGION

COARSE = GridSpec(65, 65)
FAST = PipelineConfig(pair_samples=1000, quad_step=4e-3)


def test_make_pair_builtin_values(backend):
    pair = make_pair("sin(x)*sin(y)")
    p = (math.pi / 2, 0.0)
    assert pair.F_plus(p) == pytest.approx((math.pi / 2, -1.0), abs=1e-15)
    assert pair.F_minus(p) == pytest.approx((math.pi / 2, 1.0), abs=1e-15)
    assert pair.total(p) == pytest.approx((math.pi, 0.0), abs=1e-15)


def test_make_pair_matches_closed_form(rng):
    xs, ys = rng.uniform(-math.pi, math.pi, (2, 10_000))
    a = make_pair("sin(x)*sin(y)").F_plus.evaluate(xs, ys)
    b = F_plus_closed().evaluate(xs, ys)
    assert np.max(np.abs(a.v1 - b.v1)) <= 1e-14 and np.max(np.abs(a.v2 - b.v2)) <= 1e-14


def test_zero_coupling_gives_identity(rng):
    pair = make_pair("0")
    xs, ys = rng.uniform(-3, 3, (2, 1000))
    ref = identity_field().evaluate(xs, ys)
    for F in (pair.F_plus, pair.F_minus):
        ev = F.evaluate(xs, ys)
        assert np.array_equal(ev.v1, ref.v1) and np.array_equal(ev.v2, ref.v2)
        assert np.all(ev.j11 == 1.0) and np.all(ev.j22 == 1.0)
        assert np.all(ev.j12 == 0.0) and np.all(ev.j21 == 0.0)


@pytest.mark.parametrize("seed", range(20))
def test_sum_identity_random_u(seed):
    pair = make_pair(random_admissible_u(seed))
    xs, ys = np.random.default_rng(1000 + seed).uniform(-math.pi, math.pi, (2, 10_000))
    ev = pair.total.evaluate(xs, ys)
    assert max(np.max(np.abs(ev.v1 - 2 * xs)), np.max(np.abs(ev.v2 - 2 * ys))) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_random_u_is_admissible(seed):
    u = ScalarField2.from_expr(random_admissible_u(seed))
    cert = check_remark_bounds(u, PI_REGION, GRID)
    assert cert.passed
    assert cert.check("uxx_bound").observed <= 0.9 + 1e-12
    assert random_admissible_u(seed) == random_admissible_u(seed)


def test_remark_bounds_examples(backend):
    cert = check_remark_bounds(ScalarField2.from_expr("sin(x)*sin(y)"), PI_REGION, GRID)
    assert cert.passed
    assert cert.check("uxx_bound").observed == pytest.approx(1.0, abs=1e-15)
    assert cert.check("uxy_nonconstant").observed == pytest.approx(2.0, abs=1e-15)

    cert = check_remark_bounds(ScalarField2.from_expr("x^2*y^2"), PI_REGION, GRID)
    c = cert.check("uxx_bound")
    assert not c.passed
    assert c.observed == pytest.approx(2 * math.pi**2, abs=1e-12)
    assert abs(c.witness[1]) == math.pi

    cert = check_remark_bounds(ScalarField2.from_expr("0"), PI_REGION, GRID)
    assert cert.status == "fail"
    assert cert.check("uxx_bound").passed and cert.check("uyy_bound").passed
    assert cert.check("uxy_nonconstant").observed == 0.0
    assert any("degenerate family member" in n for n in cert.notes)


@pytest.mark.parametrize("seed", range(6))
def test_bounds_imply_monotone(seed):
    # draw u with a wider margin so some draws violate the bounds
    text = random_admissible_u(seed, margin=1.6 if seed % 2 else 0.95)
    pair = make_pair(text)
    if check_remark_bounds(pair.u, PI_REGION, COARSE).passed:
        for F in (pair.F_plus, pair.F_minus):
            assert certify_monotone(F, PI_REGION, COARSE, pair_samples=500).passed


@pytest.mark.parametrize("seed", range(6))
def test_nonconstancy_implies_refutation(seed):
    pair = make_pair(random_admissible_u(seed))
    bounds = check_remark_bounds(pair.u, PI_REGION, COARSE)
    spread = bounds.check("uxy_nonconstant").observed
    threshold = 1e-6
    if spread > 2 * threshold:
        w = refute_skew_affine(pair.F_plus, PI_REGION, COARSE, threshold=threshold)
        assert w.refuted
        # the gap 2*u_xy - 2a cannot be flattened below half its range
        assert w.min_sup_residual >= spread - 2 * threshold


def test_negating_u_swaps_roles(rng):
    text = random_admissible_u(3)
    a, b = make_pair(text), make_pair(f"-({text})")
    xs, ys = rng.uniform(-3, 3, (2, 2000))
    for F, G in ((a.F_plus, b.F_minus), (a.F_minus, b.F_plus)):
        e, g = F.evaluate(xs, ys), G.evaluate(xs, ys)
        for name in ("v1", "v2", "j11", "j12", "j21", "j22"):
            assert np.array_equal(getattr(e, name), getattr(g, name))


def test_pipeline_builtin_u(backend):
    cert = refute_additivity("sin(x)*sin(y)", PI_REGION, GRID)
    assert cert.verdict == VERDICT_CERTIFIED and cert.first_failure is None
    assert len(cert.stages()) == 12
    assert cert.potential_error <= 1e-6
    for r in cert.refutations.values():
        assert r.min_sup_residual == pytest.approx(2.0, abs=1e-6)
    assert cert.affinity.spread == pytest.approx((4 * math.pi, 4 * math.pi), abs=1e-6)


def test_pipeline_zero_u_fails_at_nonconstancy():
    cert = refute_additivity("0", PI_REGION, COARSE, FAST)
    assert cert.verdict == VERDICT_FAILED
    assert cert.first_failure == "family_hypotheses.uxy_nonconstant"
    failed = {n for n, ok in cert.stages() if not ok}
    # with u_xy constant the fields are gradients, so the refutations fail too
    assert failed == {"family_hypotheses.uxy_nonconstant", "skew_refutation.F_plus",
                      "skew_refutation.F_minus"}


def test_pipeline_half_amplitude():
    cert = refute_additivity("0.5*sin(x)*sin(y)", PI_REGION, GRID, FAST)
    assert cert.certified
    for r in cert.refutations.values():
        assert r.min_sup_residual == pytest.approx(1.0, abs=1e-6)


def test_pipeline_bounds_violation():
    cert = refute_additivity("x^2*y^2", PI_REGION, COARSE, FAST)
    assert cert.verdict == VERDICT_FAILED
    assert cert.first_failure == "family_hypotheses.uxx_bound"


def test_pipeline_domain_error():
    cert = refute_additivity("1/x", PI_REGION, COARSE, FAST)
    assert cert.verdict == VERDICT_INDETERMINATE
    assert "division by zero" in cert.error


def test_pipeline_random_u_small_grid():
    for seed in (100, 101, 102):
        cert = refute_additivity(random_admissible_u(seed), PI_REGION, COARSE, FAST)
        assert cert.certified, cert.first_failure


def test_certificate_serialisation(tmp_path):
    cert = refute_additivity("sin(x)*sin(y)", PI_REGION, COARSE, FAST)
    doc = json.loads(cert.to_json())
    assert doc["schema_version"] == 1 and doc["verdict"] == VERDICT_CERTIFIED
    assert [s["id"] for s in doc["stages"]][:3] == [
        "family_hypotheses.uxx_bound", "family_hypotheses.uyy_bound",
        "family_hypotheses.uxy_nonconstant"]
    assert doc["verified"] and doc["not_verified"]
    assert cert.to_json() == refute_additivity("sin(x)*sin(y)", PI_REGION, COARSE,
                                               FAST).to_json()
    paths = cert.write_csvs(tmp_path / "csv")
    assert {p.name for p in paths} == {
        "family_uxy.csv", "convex_concave_f_plus.csv", "convex_concave_f_minus.csv",
        "monotone_F_plus.csv", "monotone_F_minus.csv", "sum_asymmetry.csv",
        "sum_potential.csv"}
    for p in paths:
        assert p.read_text().splitlines()[0] == "x,y,metric"


def test_small_region_pipeline():
    region = Region(-1.0, 1.0, -1.0, 1.0)
    cert = refute_additivity("sin(x)*sin(y)", region, COARSE, FAST)
    assert cert.certified
    # 2 cos x cos y spans [2 cos^2 1, 2] here
    w = cert.refutations["F_plus"]
    assert w.min_sup_residual == pytest.approx(1 - math.cos(1.0) ** 2, abs=1e-9)
