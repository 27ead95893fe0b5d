"""Tape evaluation backends.

The compiled extension ``monocert._ckernels`` is used when importable;
otherwise (or with ``MONOCERT_BACKEND=numpy``) a vectorised numpy
interpreter runs the same tape with :class:`~monocert.jet.Jet2` arithmetic.
Both backends report the first failing point in point-major order, so
error reporting does not depend on the backend or on partitioning.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import expr as _e
from .expr import DomainError, Tape
from .jet import Jet2, jet_cos, jet_exp, jet_sin

try:
    from ._ckernels import eval_tape as _c_eval_tape
except ImportError:  # pragma: no cover - depends on the build
    _c_eval_tape = None

BACKENDS = ("cython", "numpy") if _c_eval_tape is not None else ("numpy",)

_requested = os.environ.get("MONOCERT_BACKEND", "").strip().lower()
if _requested and _requested not in ("cython", "numpy"):
    raise ImportError(f"MONOCERT_BACKEND must be 'cython' or 'numpy', got {_requested!r}")
if _requested == "cython" and _c_eval_tape is None:
    raise ImportError("MONOCERT_BACKEND=cython but the compiled extension is not built")
BACKEND = _requested or BACKENDS[0]

# below this many points a sweep is not split across threads
MIN_CHUNK = 4096

_threads = None


def set_threads(n: int | None) -> None:
    """Cap worker threads for sweeps; ``None`` means available parallelism."""
    global _threads
    if n is not None and n < 1:
        raise ValueError("threads must be >= 1")
    _threads = n


def get_threads() -> int:
    return _threads or os.cpu_count() or 1


def _numpy_eval(tape: Tape, xs, ys, order):
    n = xs.shape[0]
    stack = []
    bad = np.full(n, -1, dtype=np.int64)
    with np.errstate(all="ignore"):
        for k, (op, arg) in enumerate(zip(tape.ops.tolist(), tape.args.tolist())):
            if op == _e.OP_CONST:
                c = np.full(n, tape.consts[arg])
                stack.append(Jet2.const(c) if order else c)
            elif op == _e.OP_X:
                stack.append(Jet2.var_x(xs) if order else xs)
            elif op == _e.OP_Y:
                stack.append(Jet2.var_y(ys) if order else ys)
            elif op == _e.OP_NEG:
                stack.append(-stack.pop())
            elif op == _e.OP_SIN:
                a = stack.pop()
                stack.append(jet_sin(a) if order else np.sin(a))
            elif op == _e.OP_COS:
                a = stack.pop()
                stack.append(jet_cos(a) if order else np.cos(a))
            elif op == _e.OP_EXP:
                a = stack.pop()
                stack.append(jet_exp(a) if order else np.exp(a))
            elif op == _e.OP_POW:
                a = stack.pop()
                if order:
                    stack.append(a ** arg)
                elif arg == 0:
                    stack.append(np.ones(n))
                else:
                    p = a
                    for _ in range(arg - 1):
                        p = p * a
                    stack.append(p)
            else:
                b = stack.pop()
                a = stack.pop()
                if op == _e.OP_ADD:
                    stack.append(a + b)
                elif op == _e.OP_SUB:
                    stack.append(a - b)
                elif op == _e.OP_MUL:
                    stack.append(a * b)
                elif op == _e.OP_DIV:
                    den = b.v if order else b
                    hit = (den == 0.0) & (bad < 0)
                    bad[hit] = k
                    stack.append(a / b)
                else:
                    raise ValueError(f"bad opcode {op}")
    (res,) = stack
    out = np.stack(res.astuple()) if order else res[None, :]
    idx = np.flatnonzero(bad >= 0)
    if idx.size:
        return out, int(idx[0]), int(bad[idx[0]])
    return out, -1, -1


def _run(tape, xs, ys, order, backend):
    if backend == "cython":
        return _c_eval_tape(tape.ops, tape.args, tape.consts, tape.depth, xs, ys, order)
    return _numpy_eval(tape, xs, ys, order)


def eval_tape(tape: Tape, xs, ys, order: int = 2, backend: str | None = None,
              threads: int | None = None):
    """Evaluate ``tape`` at points ``(xs[i], ys[i])``.

    Returns a tuple of 1-d arrays: ``(v, gx, gy, hxx, hxy, hyy)`` for
    ``order=2`` or ``(v,)`` for ``order=0``.  Raises :class:`DomainError`
    at the first point (in input order) where a divisor is zero or the
    result is not finite.
    """
    backend = backend or BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; have {BACKENDS}")
    xs = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    ys = np.ascontiguousarray(ys, dtype=np.float64).ravel()
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    order = 2 if order else 0
    n = xs.shape[0]
    workers = min(threads or get_threads(), max(1, n // MIN_CHUNK))
    if workers <= 1:
        out, bad, bad_op = _run(tape, xs, ys, order, backend)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        spans = list(zip(bounds[:-1], bounds[1:]))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda s: _run(tape, xs[s[0]:s[1]], ys[s[0]:s[1]], order, backend), spans))
        out = np.concatenate([p[0] for p in parts], axis=1)
        bad, bad_op = -1, -1
        for (lo, _), (_, b, k) in zip(spans, parts):
            if b >= 0:
                bad, bad_op = lo + b, k
                break
    if bad >= 0:
        raise DomainError("division by zero", (float(xs[bad]), float(ys[bad])),
                          tape.labels[bad_op])
    finite = np.isfinite(out).all(axis=0)
    if not finite.all():
        i = int(np.flatnonzero(~finite)[0])
        raise DomainError("non-finite result", (float(xs[i]), float(ys[i])), tape.labels[-1])
    return tuple(out)
