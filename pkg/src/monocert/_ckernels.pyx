# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stack-machine interpreter for expression tapes.

Mirrors ``monocert.jet.Jet2`` arithmetic term by term so that both
backends round identically (up to libm vs numpy transcendental ULPs).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    OP_CONST = 0
    OP_X = 1
    OP_Y = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_NEG = 7
    OP_SIN = 8
    OP_COS = 9
    OP_EXP = 10
    OP_POW = 11


cdef inline void _mul(double* a, double* b, double* r) noexcept nogil:
    cdef double v = a[0] * b[0]
    cdef double gx = a[1] * b[0] + a[0] * b[1]
    cdef double gy = a[2] * b[0] + a[0] * b[2]
    cdef double hxx = a[3] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[3]
    cdef double hxy = a[4] * b[0] + a[1] * b[2] + a[2] * b[1] + a[0] * b[4]
    cdef double hyy = a[5] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[5]
    r[0] = v; r[1] = gx; r[2] = gy; r[3] = hxx; r[4] = hxy; r[5] = hyy


cdef inline void _div(double* a, double* b, double* r) noexcept nogil:
    cdef double q = a[0] / b[0]
    cdef double qx = (a[1] - q * b[1]) / b[0]
    cdef double qy = (a[2] - q * b[2]) / b[0]
    cdef double hxx = (a[3] - 2.0 * qx * b[1] - q * b[3]) / b[0]
    cdef double hxy = (a[4] - qx * b[2] - qy * b[1] - q * b[4]) / b[0]
    cdef double hyy = (a[5] - 2.0 * qy * b[2] - q * b[5]) / b[0]
    r[0] = q; r[1] = qx; r[2] = qy; r[3] = hxx; r[4] = hxy; r[5] = hyy


cdef inline void _chain(double* a, double f0, double f1, double f2) noexcept nogil:
    cdef double gx = a[1], gy = a[2]
    a[3] = f2 * gx * gx + f1 * a[3]
    a[4] = f2 * gx * gy + f1 * a[4]
    a[5] = f2 * gy * gy + f1 * a[5]
    a[1] = f1 * gx
    a[2] = f1 * gy
    a[0] = f0


cdef Py_ssize_t _run_jets(const int[::1] ops, const int[::1] args,
                          const double[::1] consts, int depth,
                          const double[::1] xs, const double[::1] ys,
                          double[:, ::1] out, Py_ssize_t* bad_op) noexcept nogil:
    """Return the first point index hitting a zero divisor, or -1."""
    cdef Py_ssize_t n = xs.shape[0], nops = ops.shape[0]
    cdef Py_ssize_t i, k, sp, j
    cdef int op, m
    cdef double s, c, e
    cdef double* st = <double*> malloc((depth + 1) * 6 * sizeof(double))
    cdef double tmp[6]
    cdef double acc[6]
    cdef double* top
    if st == NULL:
        bad_op[0] = -2
        return -2
    for i in range(n):
        sp = 0
        for k in range(nops):
            op = ops[k]
            if op == OP_CONST:
                top = st + 6 * sp
                top[0] = consts[args[k]]
                for j in range(1, 6):
                    top[j] = 0.0
                sp += 1
            elif op == OP_X or op == OP_Y:
                top = st + 6 * sp
                top[0] = xs[i] if op == OP_X else ys[i]
                for j in range(1, 6):
                    top[j] = 0.0
                top[1 if op == OP_X else 2] = 1.0
                sp += 1
            elif op == OP_ADD:
                sp -= 1
                for j in range(6):
                    st[6 * (sp - 1) + j] = st[6 * (sp - 1) + j] + st[6 * sp + j]
            elif op == OP_SUB:
                sp -= 1
                for j in range(6):
                    st[6 * (sp - 1) + j] = st[6 * (sp - 1) + j] - st[6 * sp + j]
            elif op == OP_MUL:
                sp -= 1
                _mul(st + 6 * (sp - 1), st + 6 * sp, st + 6 * (sp - 1))
            elif op == OP_DIV:
                sp -= 1
                if st[6 * sp] == 0.0:
                    bad_op[0] = k
                    free(st)
                    return i
                _div(st + 6 * (sp - 1), st + 6 * sp, st + 6 * (sp - 1))
            elif op == OP_NEG:
                top = st + 6 * (sp - 1)
                for j in range(6):
                    top[j] = -top[j]
            elif op == OP_SIN:
                top = st + 6 * (sp - 1)
                s = sin(top[0])
                _chain(top, s, cos(top[0]), -s)
            elif op == OP_COS:
                top = st + 6 * (sp - 1)
                c = cos(top[0])
                _chain(top, c, -sin(top[0]), -c)
            elif op == OP_EXP:
                top = st + 6 * (sp - 1)
                e = exp(top[0])
                _chain(top, e, e, e)
            elif op == OP_POW:
                top = st + 6 * (sp - 1)
                m = args[k]
                if m == 0:
                    top[0] = 1.0
                    for j in range(1, 6):
                        top[j] = 0.0
                else:
                    for j in range(6):
                        tmp[j] = top[j]
                        acc[j] = top[j]
                    for j in range(m - 1):
                        _mul(acc, tmp, acc)
                    for j in range(6):
                        top[j] = acc[j]
        for j in range(6):
            out[j, i] = st[j]
    free(st)
    return -1


cdef Py_ssize_t _run_values(const int[::1] ops, const int[::1] args,
                            const double[::1] consts, int depth,
                            const double[::1] xs, const double[::1] ys,
                            double[::1] out, Py_ssize_t* bad_op) noexcept nogil:
    cdef Py_ssize_t n = xs.shape[0], nops = ops.shape[0]
    cdef Py_ssize_t i, k, sp, j
    cdef int op
    cdef double b, p
    cdef double* st = <double*> malloc((depth + 1) * sizeof(double))
    if st == NULL:
        bad_op[0] = -2
        return -2
    for i in range(n):
        sp = 0
        for k in range(nops):
            op = ops[k]
            if op == OP_CONST:
                st[sp] = consts[args[k]]
                sp += 1
            elif op == OP_X:
                st[sp] = xs[i]
                sp += 1
            elif op == OP_Y:
                st[sp] = ys[i]
                sp += 1
            elif op == OP_ADD:
                sp -= 1
                st[sp - 1] = st[sp - 1] + st[sp]
            elif op == OP_SUB:
                sp -= 1
                st[sp - 1] = st[sp - 1] - st[sp]
            elif op == OP_MUL:
                sp -= 1
                st[sp - 1] = st[sp - 1] * st[sp]
            elif op == OP_DIV:
                sp -= 1
                if st[sp] == 0.0:
                    bad_op[0] = k
                    free(st)
                    return i
                st[sp - 1] = st[sp - 1] / st[sp]
            elif op == OP_NEG:
                st[sp - 1] = -st[sp - 1]
            elif op == OP_SIN:
                st[sp - 1] = sin(st[sp - 1])
            elif op == OP_COS:
                st[sp - 1] = cos(st[sp - 1])
            elif op == OP_EXP:
                st[sp - 1] = exp(st[sp - 1])
            elif op == OP_POW:
                if args[k] == 0:
                    st[sp - 1] = 1.0
                else:
                    b = st[sp - 1]
                    p = b
                    for j in range(args[k] - 1):
                        p = p * b
                    st[sp - 1] = p
        out[i] = st[0]
    free(st)
    return -1


def eval_tape(const int[::1] ops, const int[::1] args, const double[::1] consts,
              int depth, const double[::1] xs, const double[::1] ys, int order):
    """Evaluate a tape at every point.

    Returns ``(out, bad_point, bad_op)``; ``out`` has shape ``(6, n)`` for
    ``order == 2`` and ``(1, n)`` for ``order == 0``.  ``bad_point`` is the
    first point index with a zero divisor (``-1`` if none).
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t bad_op = -1
    cdef Py_ssize_t bad
    cdef cnp.ndarray out
    cdef double[:, ::1] out2
    cdef double[::1] out0
    if order == 2:
        out = np.empty((6, n), dtype=np.float64)
        out2 = out
        with nogil:
            bad = _run_jets(ops, args, consts, depth, xs, ys, out2, &bad_op)
    else:
        out = np.empty((1, n), dtype=np.float64)
        out0 = out[0]
        with nogil:
            bad = _run_values(ops, args, consts, depth, xs, ys, out0, &bad_op)
    if bad == -2:
        raise MemoryError()
    return out, bad, bad_op
