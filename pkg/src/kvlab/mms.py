"""Manufactured-solution convergence study for the IMEX solver.

Prescribed fields::

    u(x,t)     = cos(pi x / L) (1 + t)
    v(x,t)     = u_t + a u
    theta(x,t) = sin(pi x / L) exp(-t)

Residual forcing is obtained by numerically differentiating these closed
forms (fourth-order central differences), so no derivative is derived by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .material import MaterialSet, eval_law
from .solver import InitialData, Params, simulate

MIN_ORDER = 1.5


def _d(fun, x, h):
    return (fun(x - 2 * h) - 8 * fun(x - h) + 8 * fun(x + h) - fun(x + 2 * h)) / (12 * h)


class Manufactured:
    def __init__(self, length: float, m: MaterialSet, p: Params, h: float | None = None):
        self.L, self.m, self.p = length, m, p
        self.k = math.pi / length
        self.h = 1e-3 * length if h is None else h

    def u(self, x, t):
        return np.cos(self.k * x) * (1.0 + t)

    def v(self, x, t):
        return np.cos(self.k * x) * (1.0 + self.p.a * (1.0 + t))

    def theta(self, x, t):
        return np.sin(self.k * x) * math.exp(-t)

    def forcing(self, x, t):
        a, D, h, m = self.p.a, self.p.D, self.h, self.m
        ht = 1e-3

        def vx(xx):
            return _d(lambda y: self.v(y, t), xx, h)

        def ux(xx):
            return _d(lambda y: self.u(y, t), xx, h)

        def stress(xx):
            return eval_law(m.gamma, self.theta(xx, t)) * vx(xx)

        def f_of_theta(xx):
            return eval_law(m.f, self.theta(xx, t))

        v_t = _d(lambda s: self.v(x, s), t, ht)
        s_v = (
            v_t
            - _d(stress, x, h)
            - a * self.v(x, t)
            + a * a * self.u(x, t)
            - _d(f_of_theta, x, h)
        )
        th = self.theta(x, t)
        th_t = _d(lambda s: self.theta(x, s), t, ht)
        th_xx = _d(lambda y: _d(lambda z: self.theta(z, t), y, h), x, h)
        w = vx(x) - a * ux(x)
        s_th = th_t - D * th_xx - eval_law(m.Gamma, th) * w * w - eval_law(m.F, th) * w
        return s_v, s_th


@dataclass
class MMSLevel:
    n: int
    dx: float
    dt: float
    err_u: float
    err_v: float
    err_theta: float


@dataclass
class MMSReport:
    levels: list = field(default_factory=list)
    orders: dict = field(default_factory=dict)
    min_order: float = MIN_ORDER

    @property
    def passed(self) -> bool:
        return all(min(o) >= self.min_order for o in self.orders.values() if o)

    def observed_order(self, name: str) -> float:
        """Order from the two finest levels."""
        return self.orders[name][-1]

    def to_text(self) -> str:
        lines = ["    n          dx          dt       err_u       err_v   err_theta"]
        for lv in self.levels:
            lines.append(
                f"{lv.n:5d} {lv.dx:11.4e} {lv.dt:11.4e} {lv.err_u:11.4e} {lv.err_v:11.4e} {lv.err_theta:11.4e}"
            )
        for name, orders in self.orders.items():
            lines.append(f"order {name:<6}: " + ", ".join(f"{o:.3f}" for o in orders))
        lines.append("verdict: " + ("pass" if self.passed else f"FAIL (order below {self.min_order})"))
        return "\n".join(lines)

    def to_csv(self) -> str:
        rows = ["n,dx,dt,err_u,err_v,err_theta,order_u,order_v,order_theta"]
        for i, lv in enumerate(self.levels):
            orders = ["" if i == 0 else repr(self.orders[k][i - 1]) for k in ("u", "v", "theta")]
            rows.append(",".join([str(lv.n), repr(lv.dx), repr(lv.dt), repr(lv.err_u), repr(lv.err_v), repr(lv.err_theta), *orders]))
        return "\n".join(rows) + "\n"


def run_mms(
    length: float,
    m: MaterialSet,
    p: Params,
    *,
    levels: int = 4,
    n0: int = 17,
    T: float = 0.25,
    dt_factor: float = 0.5,
    zero_forcing: bool = False,
) -> MMSReport:
    """Run ``levels`` refinements (dx halves, dt = dt_factor * dx^2 / L^2 * L)."""
    if levels < 2:
        raise ValueError("need at least two levels for an order estimate")
    report = MMSReport()
    for lev in range(levels):
        n = (n0 - 1) * 2**lev + 1
        grid = Grid(length, n)
        x = grid.x
        dt = dt_factor * grid.dx**2 / length
        mf = Manufactured(length, m, p)
        th0 = mf.theta(x, 0.0)
        th0[0] = th0[-1] = 0.0
        u0 = mf.u(x, 0.0)
        u0t = mf.v(x, 0.0) - p.a * u0
        if zero_forcing:
            u0, u0t, th0 = np.zeros(n), np.zeros(n), np.zeros(n)
            source = None
        else:
            def source(t, _mf=mf, _x=x):
                return _mf.forcing(_x, t)
        data = InitialData(u0, u0t, th0)
        traj, verdict = simulate(grid, data, m, p, T_star=T, dt=dt, sample_stride=10**9, source=source)
        if verdict.kind != "reached_T":
            raise RuntimeError(f"MMS run at n={n} ended with {verdict.kind}: {verdict.detail}")
        s = traj.final_state
        if zero_forcing:
            exact_u = exact_v = exact_th = np.zeros(n)
        else:
            exact_u, exact_v, exact_th = mf.u(x, T), mf.v(x, T), mf.theta(x, T)
        report.levels.append(
            MMSLevel(
                n,
                grid.dx,
                dt,
                float(np.max(np.abs(s.u - exact_u))),
                float(np.max(np.abs(s.v - exact_v))),
                float(np.max(np.abs(s.theta - exact_th))),
            )
        )
    for name in ("u", "v", "theta"):
        errs = [getattr(lv, f"err_{name}") for lv in report.levels]
        report.orders[name] = [
            math.log2(e0 / e1) if e0 > 0 and e1 > 0 else float("nan") for e0, e1 in zip(errs, errs[1:])
        ]
    return report
