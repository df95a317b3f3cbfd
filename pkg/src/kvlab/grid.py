"""Uniform 1D grid, boundary-aware difference operators and quadrature.

Fields are node-centred. ``neumann`` fields use ghost reflection
(w[-1] = w[1]); ``dirichlet0`` fields vanish at both end nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

NEUMANN = "neumann"
DIRICHLET0 = "dirichlet0"
_BCS = (NEUMANN, DIRICHLET0)


@dataclass(frozen=True)
class Grid:
    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("grid needs at least 3 nodes")

    @property
    def dx(self) -> float:
        return self.length / (self.n - 1)

    @property
    def x(self):
        x = np.arange(self.n) * self.dx
        x[-1] = self.length
        return x


@dataclass(frozen=True)
class Field:
    values: np.ndarray
    bc: str = NEUMANN

    def __post_init__(self):
        if self.bc not in _BCS:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        values = np.array(self.values, dtype=float)
        if self.bc == DIRICHLET0 and (values[0] != 0.0 or values[-1] != 0.0):
            raise ValueError("dirichlet0 field must vanish at both end nodes")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _as_values(field, grid):
    if isinstance(field, Field):
        values, bc = field.values, field.bc
    else:
        raise TypeError("expected a Field")
    if values.shape != (grid.n,):
        raise ValueError(f"field has {values.shape[0]} values, grid has {grid.n} nodes")
    return values, bc


def diff1(values, dx, bc):
    """Array-level first derivative used by :func:`dx1` and the solver."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    if bc == NEUMANN:
        out[0] = 0.0
        out[-1] = 0.0
    else:
        out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)
        out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)
    return out


def dx1(field: Field, grid: Grid):
    """Second-order first derivative with boundary handling per ``field.bc``."""
    values, bc = _as_values(field, grid)
    return diff1(values, grid.dx, bc)


def face_coefficients(coef, n):
    coef = np.asarray(coef, dtype=float)
    if coef.ndim == 0:
        return np.full(n - 1, float(coef))
    if coef.shape == (n,):
        return 0.5 * (coef[:-1] + coef[1:])
    if coef.shape == (n - 1,):
        return coef
    raise ValueError(f"coefficient of shape {coef.shape} fits neither nodes nor faces of {n}")


def flux_div_values(face, values, dx, bc):
    flux = face * (values[1:] - values[:-1])
    out = np.empty_like(values)
    out[1:-1] = (flux[1:] - flux[:-1]) / dx**2
    if bc == NEUMANN:
        # ghost reflection: zero boundary flux, half control volume
        out[0] = 2.0 * flux[0] / dx**2
        out[-1] = -2.0 * flux[-1] / dx**2
    else:
        out[0] = 0.0
        out[-1] = 0.0
    return out


def flux_div(coef, field: Field, grid: Grid, positive: bool = True):
    """Conservative (c w_x)_x; node coefficients are averaged to faces."""
    values, bc = _as_values(field, grid)
    face = face_coefficients(coef, grid.n)
    if positive and np.any(face <= 0):
        raise ValueError("flux coefficient must be positive")
    return flux_div_values(face, values, grid.dx, bc)


def trapezoid_values(values, dx):
    return dx * (0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1])


def trapezoid(values, grid: Grid) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError("size mismatch between values and grid")
    return float(trapezoid_values(values, grid.dx))


@dataclass(frozen=True)
class FunctionalPack:
    int_ux2: float
    int_ux4: float
    int_vx2: float
    int_vx4: float
    int_thx2: float
    linf_theta: float
    theta_min: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def functional_pack_arrays(u, v, theta, dx) -> FunctionalPack:
    ux = diff1(u, dx, NEUMANN)
    vx = diff1(v, dx, NEUMANN)
    thx = diff1(theta, dx, DIRICHLET0)
    ux2, vx2 = ux * ux, vx * vx
    return FunctionalPack(
        int_ux2=float(trapezoid_values(ux2, dx)),
        int_ux4=float(trapezoid_values(ux2 * ux2, dx)),
        int_vx2=float(trapezoid_values(vx2, dx)),
        int_vx4=float(trapezoid_values(vx2 * vx2, dx)),
        int_thx2=float(trapezoid_values(thx * thx, dx)),
        linf_theta=float(np.max(np.abs(theta))),
        theta_min=float(np.min(theta)),
    )


def functional_pack(u: Field, v: Field, theta: Field, grid: Grid) -> FunctionalPack:
    """Integrals of the gradient powers entering the energy functional."""
    uu, _ = _as_values(u, grid)
    vv, _ = _as_values(v, grid)
    tt, _ = _as_values(theta, grid)
    return functional_pack_arrays(uu, vv, tt, grid.dx)
