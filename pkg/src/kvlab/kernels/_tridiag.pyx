# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tridiagonal kernels. Mirrors :mod:`kvlab.kernels._fallback`."""
import numpy as np


cdef int _thomas(double[::1] lower, double[::1] diag, double[::1] upper,
                 double[::1] rhs, double[::1] out, double[::1] work) noexcept nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double denom = diag[0]
    if denom == 0.0:
        return -1
    work[0] = upper[0] / denom
    out[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i] * work[i - 1]
        if denom == 0.0:
            return -1
        work[i] = upper[i] / denom
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        out[i] -= work[i] * out[i + 1]
    return 0


def thomas(lower, diag, upper, rhs):
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    if lo.shape[0] != n or up.shape[0] != n or b.shape[0] != n:
        raise ValueError("tridiagonal bands and right-hand side must share one length")
    out = np.empty(n, dtype=np.float64)
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] w = work
    cdef int status
    with nogil:
        status = _thomas(lo, di, up, b, o, w)
    if status != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return out


def solve_neumann(coef_node, double shift, double k, rhs):
    cdef double[::1] c = np.ascontiguousarray(coef_node, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i
    cdef double cl, cr
    if b.shape[0] != n:
        raise ValueError("size mismatch")
    lo_a = np.empty(n); di_a = np.empty(n); up_a = np.empty(n)
    out = np.empty(n); work = np.empty(n)
    cdef double[::1] lo = lo_a
    cdef double[::1] di = di_a
    cdef double[::1] up = up_a
    cdef double[::1] o = out
    cdef double[::1] w = work
    cdef int status
    with nogil:
        cr = 0.5 * (c[0] + c[1])
        lo[0] = 0.0
        di[0] = shift + 2.0 * k * cr
        up[0] = -2.0 * k * cr
        for i in range(1, n - 1):
            cl = cr
            cr = 0.5 * (c[i] + c[i + 1])
            lo[i] = -k * cl
            di[i] = shift + k * (cl + cr)
            up[i] = -k * cr
        lo[n - 1] = -2.0 * k * cr
        di[n - 1] = shift + 2.0 * k * cr
        up[n - 1] = 0.0
        status = _thomas(lo, di, up, b, o, w)
    if status != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return out


def solve_dirichlet(double k, rhs):
    cdef double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t m = n - 2
    cdef Py_ssize_t i
    out = np.zeros(n)
    if m <= 0:
        return out
    lo_a = np.full(m, -k); di_a = np.full(m, 1.0 + 2.0 * k); up_a = np.full(m, -k)
    work = np.empty(m)
    lo_a[0] = 0.0
    up_a[m - 1] = 0.0
    cdef double[::1] lo = lo_a
    cdef double[::1] di = di_a
    cdef double[::1] up = up_a
    cdef double[::1] o = out[1:n - 1]
    cdef double[::1] bi = b[1:n - 1]
    cdef double[::1] w = work
    cdef int status
    with nogil:
        status = _thomas(lo, di, up, bi, o, w)
    if status != 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    return out
