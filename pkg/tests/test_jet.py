import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monocert import kernels
from monocert.expr import DomainError, compile_tape, parse
from monocert.jet import Jet2, eval, eval_jet

from oracles import fd_derivatives, fd_second_from_values, random_expression, rel_err

F_PLUS = "x^2/2 + sin(x)*sin(y) - y^2/2"


def test_product_of_sines_at_origin(backend):
    assert eval_jet("sin(x)*sin(y)", (0.0, 0.0)) == Jet2(0.0, 0.0, 0.0, 0.0, 1.0, 0.0)


def test_half_square(backend):
    assert eval_jet("x^2/2", (3.0, 7.0)) == Jet2(4.5, 3.0, 0.0, 1.0, 0.0, 0.0)


def test_reciprocal_pole(backend):
    with pytest.raises(DomainError) as ei:
        eval_jet("1/x", (0.0, 0.0))
    assert ei.value.point == (0.0, 0.0)
    assert ei.value.subexpr == "1.0 / x"
    with pytest.raises(DomainError):
        eval("1/x", (0.0, 0.0))


def test_values(backend):
    assert eval(F_PLUS, (0.0, 0.0)) == 0.0
    assert eval("sin(x)*sin(y)", (math.pi / 2, math.pi / 2)) == 1.0
    assert eval("exp(x)", (1.0, 0.0)) == pytest.approx(math.e, abs=1e-15)


def test_f_plus_jet_closed_form(backend):
    x, y = 0.7, -1.3
    j = eval_jet(F_PLUS, (x, y))
    assert j.gx == pytest.approx(x + math.cos(x) * math.sin(y), abs=1e-15)
    assert j.gy == pytest.approx(math.sin(x) * math.cos(y) - y, abs=1e-15)
    assert j.hxx == pytest.approx(1 - math.sin(x) * math.sin(y), abs=1e-15)
    assert j.hxy == pytest.approx(math.cos(x) * math.cos(y), abs=1e-15)
    assert j.hyy == pytest.approx(-1 - math.sin(x) * math.sin(y), abs=1e-15)


def test_zero_power_is_one(backend):
    assert eval_jet("(x+y)^0", (2.0, 3.0)) == Jet2(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_nested_division_names_inner_term(backend):
    with pytest.raises(DomainError) as ei:
        eval("x + 1/(y - 2)", (0.0, 2.0))
    assert ei.value.subexpr == "1.0 / (y - 2.0)"


def test_overflow_is_domain_error(backend):
    with pytest.raises(DomainError, match="non-finite"):
        eval("exp(exp(x))", (10.0, 0.0))


@pytest.mark.parametrize("seed", range(5))
def test_against_finite_differences(backend, seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        text = random_expression(rng)
        p = tuple(rng.uniform(-2.0, 2.0, 2))
        j = eval_jet(text, p)
        ref = fd_derivatives(text, p)
        got = (j.gx, j.gy, j.hxx, j.hxy, j.hyy)
        assert max(rel_err(a, b) for a, b in zip(got, ref)) <= 1e-6, (text, p)


def test_hessian_against_value_only_differences():
    rng = np.random.default_rng(11)
    for _ in range(300):
        text = random_expression(rng)
        p = tuple(rng.uniform(-2.0, 2.0, 2))
        j = eval_jet(text, p)
        ref = fd_second_from_values(text, p)
        # value-only second differences carry ~eps**0.5 rounding noise
        assert max(rel_err(a, b) for a, b in zip((j.hxx, j.hxy, j.hyy), ref)) <= 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_value_path_matches_jet_bitwise(backend, seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        tape = compile_tape(parse(random_expression(rng, depth=4)))
        xs, ys = rng.uniform(-3, 3, (2, 500))
        try:
            jets = kernels.eval_tape(tape, xs, ys, order=2)
        except DomainError:
            continue
        (v,) = kernels.eval_tape(tape, xs, ys, order=0)
        assert np.array_equal(v, jets[0])


@pytest.mark.skipif(len(kernels.BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_agree():
    rng = np.random.default_rng(3)
    for _ in range(40):
        tape = compile_tape(parse(random_expression(rng, depth=4)))
        xs, ys = rng.uniform(-2, 2, (2, 2000))
        a = np.array(kernels.eval_tape(tape, xs, ys, backend="cython"))
        b = np.array(kernels.eval_tape(tape, xs, ys, backend="numpy"))
        scale = np.maximum(1.0, np.abs(b))
        assert np.max(np.abs(a - b) / scale) <= 1e-13


def test_domain_error_independent_of_backend_and_threads():
    tape = compile_tape(parse("sin(x) + 1/(x*y - 1)"))
    xs = np.linspace(-3, 3, 20001)
    ys = np.full_like(xs, 2.0)
    xs[15000] = 0.5  # the only pole
    seen = set()
    for backend in kernels.BACKENDS:
        for threads in (1, 4):
            with pytest.raises(DomainError) as ei:
                kernels.eval_tape(tape, xs, ys, backend=backend, threads=threads)
            seen.add((ei.value.point, ei.value.subexpr))
    assert seen == {((0.5, 2.0), "1.0 / (x * y - 1.0)")}


def test_threads_do_not_change_results(backend):
    tape = compile_tape(parse(F_PLUS))
    rng = np.random.default_rng(5)
    xs, ys = rng.uniform(-4, 4, (2, 30000))
    one = np.array(kernels.eval_tape(tape, xs, ys, threads=1))
    many = np.array(kernels.eval_tape(tape, xs, ys, threads=8))
    assert np.array_equal(one, many)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-5, 5), st.floats(-5, 5),
    st.floats(-3, 3), st.floats(-3, 3),
)
def test_product_rule(a, b, x, y):
    # d/dx [f g] for f = sin(a x + y), g = exp(b y - x)
    f, g = f"sin({a!r}*x + y)", f"exp({b!r}*y - x)"
    jf, jg, jp = eval_jet(f, (x, y)), eval_jet(g, (x, y)), eval_jet(f"{f}*{g}", (x, y))
    assert jp.gx == pytest.approx(jf.gx * jg.v + jf.v * jg.gx, rel=1e-12, abs=1e-12)
    assert jp.hxy == pytest.approx(
        jf.hxy * jg.v + jf.gx * jg.gy + jf.gy * jg.gx + jf.v * jg.hxy, rel=1e-12, abs=1e-10)


def test_jet_arithmetic_scalars():
    x, y = Jet2.var_x(2.0), Jet2.var_y(-1.0)
    q = (x * y) / (x + Jet2.const(1.0))
    # q = xy/(x+1); q_x = y/(x+1)^2, q_xx = -2y/(x+1)^3, q_xy = 1/(x+1)^2
    assert q.gx == pytest.approx(-1 / 9)
    assert q.hxx == pytest.approx(2 / 27)
    assert q.hxy == pytest.approx(1 / 9)
    assert q.hyy == 0.0
