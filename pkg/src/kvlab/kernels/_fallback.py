"""Pure-Python tridiagonal kernels, used when the compiled module is absent."""
from __future__ import annotations

import numpy as np


def _thomas_lists(lo, di, up, b):
    n = len(di)
    work = [0.0] * n
    out = [0.0] * n
    denom = di[0]
    if denom == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    work[0] = up[0] / denom
    out[0] = b[0] / denom
    for i in range(1, n):
        denom = di[i] - lo[i] * work[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        work[i] = up[i] / denom
        out[i] = (b[i] - lo[i] * out[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        out[i] -= work[i] * out[i + 1]
    return out


def thomas(lower, diag, upper, rhs):
    """Solve ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.

    ``lower[0]`` and ``upper[-1]`` are ignored. No pivoting: the callers only
    build strictly diagonally dominant systems.
    """
    arrays = [np.asarray(a, dtype=float) for a in (lower, diag, upper, rhs)]
    n = arrays[1].shape[0]
    if any(a.shape != (n,) for a in arrays):
        raise ValueError("tridiagonal bands and right-hand side must share one length")
    return np.array(_thomas_lists(*(a.tolist() for a in arrays)))


def neumann_bands(coef_node, shift, k):
    """Bands of ``shift*I - k*L`` with L the zero-flux (c w_x)_x operator."""
    c = np.asarray(coef_node, dtype=float)
    face = 0.5 * (c[:-1] + c[1:])
    n = c.shape[0]
    lo = np.zeros(n)
    up = np.zeros(n)
    lo[1:-1] = -k * face[:-1]
    up[1:-1] = -k * face[1:]
    up[0] = -2.0 * k * face[0]
    lo[-1] = -2.0 * k * face[-1]
    di = np.empty(n)
    di[1:-1] = shift + k * (face[:-1] + face[1:])
    di[0] = shift + 2.0 * k * face[0]
    di[-1] = shift + 2.0 * k * face[-1]
    return lo, di, up


def solve_neumann(coef_node, shift, k, rhs):
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != np.shape(coef_node):
        raise ValueError("size mismatch")
    return thomas(*neumann_bands(coef_node, shift, k), rhs)


def solve_dirichlet(k, rhs):
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    out = np.zeros(n)
    m = n - 2
    if m <= 0:
        return out
    lo = np.full(m, -k)
    up = np.full(m, -k)
    di = np.full(m, 1.0 + 2.0 * k)
    out[1:-1] = thomas(lo, di, up, rhs[1:-1])
    return out
