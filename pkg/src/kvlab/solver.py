"""IMEX time stepping of the substituted parabolic system in (u, v, theta).

Unknowns: v = u_t + a u (Neumann), u (Neumann), theta (Dirichlet, zero).
One step freezes the coefficient laws at theta^n, solves one tridiagonal
system for v, updates u in closed form and solves one tridiagonal system for
theta. The -a^2 u reaction is taken at the new level and eliminated through
the closed-form u update, which keeps the v-system tridiagonal and makes the
discrete integral of v - a u an exact invariant.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .grid import (
    DIRICHLET0,
    NEUMANN,
    FunctionalPack,
    Grid,
    diff1,
    flux_div_values,
    functional_pack_arrays,
    trapezoid_values,
)
from .material import LawExpr, MaterialSet, eval_law, law_derivative

logger = logging.getLogger(__name__)

COMPAT_TOL = 1e-8
REACHED_T = "reached_T"
BLOWUP = "blowup"
STEP_FAILURE = "step_failure"


class InitialDataError(ValueError):
    pass


class StepFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Params:
    a: float
    D: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("a must be a positive finite number")
        if not (self.D > 0 and math.isfinite(self.D)):
            raise ValueError("D must be a positive finite number")


@dataclass(frozen=True)
class Thresholds:
    threshold_w12: float = 1e8
    threshold_linf: float = 1e8
    pos_tol: float = 1e-10

    def __post_init__(self):
        if not (self.threshold_w12 > 0 and self.threshold_linf > 0 and self.pos_tol > 0):
            raise ValueError("thresholds must be positive")


def _one_sided_law_slope(law: LawExpr, x0: float, h: float) -> float:
    # fourth-order one-sided stencil; h < 0 looks to the left of x0
    f = [eval_law(law, x0 + j * h) for j in range(5)]
    return (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)


def _grid_slope_excess(values, dx):
    """Boundary slopes minus their truncation-error allowance (both ends)."""
    out = []
    for w in (values, values[::-1]):
        slope = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * dx)
        third = (w[3] - 3 * w[2] + 3 * w[1] - w[0]) / dx**3 if w.shape[0] > 3 else 0.0
        allowance = COMPAT_TOL + 2.0 * dx**2 / 3.0 * abs(third)
        out.append(abs(slope) - allowance)
    return max(out)


@dataclass(frozen=True)
class InitialData:
    """Grid samples of u0, u0t (Neumann) and theta0 (zero Dirichlet)."""

    u0: np.ndarray
    u0t: np.ndarray
    theta0: np.ndarray

    def validate(self, grid: Grid, laws=None):
        for name in ("u0", "u0t", "theta0"):
            arr = getattr(self, name)
            if np.shape(arr) != (grid.n,):
                raise InitialDataError(f"{name} has shape {np.shape(arr)}, grid has {grid.n} nodes")
            if not np.all(np.isfinite(arr)):
                raise InitialDataError(f"{name} is not finite")
        th = self.theta0
        if th[0] != 0.0 or th[-1] != 0.0:
            raise InitialDataError("theta0 must vanish at both end nodes")
        if np.any(th < 0):
            k = int(np.argmin(th))
            raise InitialDataError(f"theta0 is negative at node {k} (value {th[k]:.3g})")
        for name in ("u0", "u0t"):
            if laws is not None:
                law = laws[name]
                h = 1e-4 * grid.length
                slopes = (_one_sided_law_slope(law, 0.0, h), _one_sided_law_slope(law, grid.length, -h))
                excess = max(abs(s) for s in slopes) - COMPAT_TOL
            else:
                excess = _grid_slope_excess(getattr(self, name), grid.dx)
            if excess > 0:
                raise InitialDataError(f"{name} violates the Neumann condition (boundary slope too large)")
        if laws is not None and "theta0" in laws:
            h = 1e-4 * grid.length
            slope = max(
                abs(_one_sided_law_slope(laws["theta0"], 0.0, h)),
                abs(_one_sided_law_slope(laws["theta0"], grid.length, -h)),
            )
            if slope > COMPAT_TOL:
                logger.info(
                    "theta0 has boundary slope %.3g; Dirichlet conditions are used for theta throughout",
                    slope,
                )
        return self

    @classmethod
    def from_laws(cls, grid: Grid, u0: LawExpr, u0t: LawExpr, theta0: LawExpr, snap_tol: float = 1e-12):
        """Evaluate laws in x on the grid; theta0 end values within ``snap_tol`` are set to 0."""
        x = grid.x
        th = eval_law(theta0, x)
        for k in (0, -1):
            if abs(th[k]) <= snap_tol:
                th[k] = 0.0
        data = cls(eval_law(u0, x), eval_law(u0t, x), th)
        return data.validate(grid, {"u0": u0, "u0t": u0t, "theta0": theta0})


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    v: np.ndarray
    theta: np.ndarray

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.theta)))


def init_state(data: InitialData, params: Params) -> State:
    u = np.array(data.u0, dtype=float)
    v = np.array(data.u0t, dtype=float) + params.a * u
    return State(0.0, u, v, np.array(data.theta0, dtype=float))


# ----------------------------------------------------------------- stepping


def f_flux_derivative(fv, dx):
    """(f(theta))_x in flux form: centred inside, half-cell at the ends.

    Its trapezoid integral telescopes to f(theta_end) - f(theta_0), which is
    zero since theta vanishes at both ends.
    """
    g = np.empty_like(fv)
    g[1:-1] = (fv[2:] - fv[:-2]) / (2.0 * dx)
    g[0] = (fv[1] - fv[0]) / dx
    g[-1] = (fv[-1] - fv[-2]) / dx
    return g


def step(state: State, dt: float, m: MaterialSet, p: Params, grid: Grid, source=None) -> State:
    """Advance one IMEX step of size ``dt``.

    ``source(t) -> (S_v, S_theta)`` adds forcing evaluated at the new time
    level (used for manufactured solutions).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not state.is_finite():
        raise StepFailure(f"non-finite state at t={state.t:.6g}")
    a, D, dx = p.a, p.D, grid.dx
    u, v, theta = state.u, state.v, state.theta
    try:
        gam, Gam, fv, Fv = m.coefficients(theta)
    except ArithmeticError as exc:
        raise StepFailure(f"coefficient evaluation failed at t={state.t:.6g}: {exc}") from exc
    if np.any(gam <= 0):
        raise StepFailure(f"gamma(theta) not positive at t={state.t:.6g}")

    t_new = state.t + dt
    s_v = s_th = None
    if source is not None:
        s_v, s_th = source(t_new)

    # increment form: the residual of the old state is assembled explicitly,
    # so exact steady states stay fixed to rounding of the residual alone
    r = 1.0 + dt * a
    face = 0.5 * (gam[:-1] + gam[1:])
    rhs_v = (dt * a / r) * (v - a * u) + dt * (flux_div_values(face, v, dx, NEUMANN) + f_flux_derivative(fv, dx))
    if s_v is not None:
        rhs_v = rhs_v + dt * s_v
    v_new = v + kernels.solve_neumann(gam, 1.0 / r, dt / dx**2, rhs_v)
    u_new = u + (dt / r) * (v_new - a * u)

    w = diff1(v_new - a * u_new, dx, NEUMANN)
    lap = np.zeros_like(theta)
    lap[1:-1] = (theta[2:] - 2.0 * theta[1:-1] + theta[:-2]) / dx**2
    rhs_t = dt * (D * lap + Gam * w * w + Fv * w)
    if s_th is not None:
        rhs_t = rhs_t + dt * s_th
    th_new = theta + kernels.solve_dirichlet(dt * D / dx**2, rhs_t)
    th_new[0] = th_new[-1] = 0.0

    new = State(t_new, u_new, v_new, th_new)
    if not new.is_finite():
        raise StepFailure(f"non-finite values after step to t={t_new:.6g}")
    return new


def relative_change(old: State, new: State) -> float:
    worst = 0.0
    for name in ("u", "v", "theta"):
        a0, a1 = getattr(old, name), getattr(new, name)
        worst = max(worst, float(np.max(np.abs(a1 - a0))) / (1.0 + float(np.max(np.abs(a0)))))
    return worst


def advance(state, dt, m, p, grid, step_change_cap=math.inf, max_halvings=0, source=None):
    """One macro step, retried with 2, 4, ... substeps while the change is capped."""
    last = ""
    for level in range(max_halvings + 1):
        parts = 2**level
        h = dt / parts
        current = state
        ok = True
        try:
            for j in range(parts):
                nxt = step(current, h, m, p, grid, source)
                change = relative_change(current, nxt) if step_change_cap < math.inf else 0.0
                if change > step_change_cap:
                    ok = False
                    last = f"relative change {change:.3g} exceeds cap {step_change_cap:g} with dt={h:.3g}"
                    break
                current = nxt
        except StepFailure as exc:
            ok = False
            last = str(exc)
        if ok:
            # land exactly on the macro time
            return replace(current, t=state.t + dt)
    raise StepFailure(f"step from t={state.t:.6g} failed after {max_halvings} halvings: {last}")


# ------------------------------------------------------------- monitoring


def w12_norm(state: State, p: Params, grid: Grid) -> float:
    w = state.v - p.a * state.u
    wx = diff1(w, grid.dx, NEUMANN)
    return math.sqrt(float(trapezoid_values(w * w, grid.dx)) + float(trapezoid_values(wx * wx, grid.dx)))


def mass(state: State, grid: Grid, a: float) -> float:
    """Trapezoid integral of v - a u (conserved by the scheme)."""
    return float(trapezoid_values(state.v - a * state.u, grid.dx))


def detect_blowup(state: State, thresholds: Thresholds, p: Params, grid: Grid):
    """Return ``"w12"``, ``"theta_linf"`` or ``"theta_negative"``, else None."""
    if not w12_norm(state, p, grid) <= thresholds.threshold_w12:
        return "w12"
    if not float(np.max(np.abs(state.theta))) <= thresholds.threshold_linf:
        return "theta_linf"
    if float(np.min(state.theta)) < -thresholds.pos_tol:
        return "theta_negative"
    return None


@dataclass(frozen=True)
class ExtendedPack:
    """Second-derivative and mixed integrals needed by the lemma checks."""

    int_gamma_vxx2: float
    int_vxx2: float
    int_thxx2: float
    int_thx4: float
    int_F2_uxt2: float
    int_gp2_vx2_thx2: float
    int_fp2_thx2: float


def extended_pack(state: State, m: MaterialSet, p: Params, grid: Grid) -> ExtendedPack:
    dx = grid.dx
    u, v, th = state.u, state.v, state.theta
    vx = diff1(v, dx, NEUMANN)
    thx = diff1(th, dx, DIRICHLET0)
    uxt = diff1(v - p.a * u, dx, NEUMANN)

    vxx = np.empty_like(v)
    vxx[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx**2
    vxx[0] = 2 * (v[1] - v[0]) / dx**2
    vxx[-1] = 2 * (v[-2] - v[-1]) / dx**2
    thxx = np.zeros_like(th)
    thxx[1:-1] = (th[2:] - 2 * th[1:-1] + th[:-2]) / dx**2

    gam = eval_law(m.gamma, th)
    Fv = eval_law(m.F, th)
    thc = np.maximum(th, 0.0)  # derivative stencils need s >= 0
    gp = law_derivative(m.gamma, thc)
    fp = law_derivative(m.f, thc)

    def integral(values):
        return float(trapezoid_values(values, dx))

    return ExtendedPack(
        int_gamma_vxx2=integral(gam * vxx**2),
        int_vxx2=integral(vxx**2),
        int_thxx2=integral(thxx**2),
        int_thx4=integral(thx**4),
        int_F2_uxt2=integral(Fv**2 * uxt**2),
        int_gp2_vx2_thx2=integral(gp**2 / gam * vx**2 * thx**2),
        int_fp2_thx2=integral(fp**2 / gam * thx**2),
    )


@dataclass(frozen=True)
class Sample:
    t: float
    pack: FunctionalPack
    ext: ExtendedPack
    mass: float
    w12: float
    y_log: float | None = None


@dataclass(frozen=True)
class Verdict:
    kind: str
    t_end: float
    reason: str
    pack: FunctionalPack
    detail: str = ""


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)
    a: float = float("nan")
    dt: float = float("nan")
    n: int = 0
    final_state: State | None = None

    def __len__(self):
        return len(self.samples)

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    def column(self, name: str):
        first = self.samples[0]
        if hasattr(first.pack, name):
            return np.array([getattr(s.pack, name) for s in self.samples])
        if hasattr(first.ext, name):
            return np.array([getattr(s.ext, name) for s in self.samples])
        return np.array([np.nan if getattr(s, name) is None else getattr(s, name) for s in self.samples])


def _sample(state, m, p, grid, y_monitor):
    pack = functional_pack_arrays(state.u, state.v, state.theta, grid.dx)
    return Sample(
        t=state.t,
        pack=pack,
        ext=extended_pack(state, m, p, grid),
        mass=mass(state, grid, p.a),
        w12=w12_norm(state, p, grid),
        y_log=None if y_monitor is None else y_monitor(pack),
    )


def simulate(
    grid: Grid,
    data: InitialData,
    m: MaterialSet,
    p: Params,
    *,
    T_star: float,
    dt: float,
    thresholds: Thresholds = Thresholds(),
    sample_stride: int = 1,
    step_change_cap: float = math.inf,
    max_halvings: int = 0,
    y_monitor=None,
    source=None,
    initial_state: State | None = None,
):
    """Integrate from t = 0 to ``T_star``; returns ``(Trajectory, Verdict)``.

    Blow-up and step failure end the run early with the corresponding verdict;
    nothing is raised for them.
    """
    if not (T_star > 0 and dt > 0):
        raise ValueError("T_star and dt must be positive")
    if sample_stride < 1:
        raise ValueError("sample_stride must be at least 1")
    state = initial_state if initial_state is not None else init_state(data.validate(grid), p)
    traj = Trajectory(a=p.a, dt=dt, n=grid.n)
    traj.samples.append(_sample(state, m, p, grid, y_monitor))
    n_steps = max(1, math.ceil(T_star / dt - 1e-9))
    verdict = None
    for k in range(1, n_steps + 1):
        t_next = T_star if k == n_steps else k * dt
        try:
            state = advance(state, t_next - state.t, m, p, grid, step_change_cap, max_halvings, source)
        except StepFailure as exc:
            pack = functional_pack_arrays(state.u, state.v, state.theta, grid.dx)
            verdict = Verdict(STEP_FAILURE, state.t, "step_failure", pack, str(exc))
            break
        reason = detect_blowup(state, thresholds, p, grid)
        if reason or k % sample_stride == 0 or k == n_steps:
            traj.samples.append(_sample(state, m, p, grid, y_monitor))
        if reason:
            verdict = Verdict(BLOWUP, state.t, reason, traj.samples[-1].pack, f"{reason} threshold crossed")
            break
    if verdict is None:
        verdict = Verdict(REACHED_T, state.t, "", traj.samples[-1].pack)
    traj.final_state = state
    return traj, verdict


def default_dt(grid: Grid, a: float, dt_user: float | None = None) -> float:
    """A user-set dt is taken as is; otherwise min(0.25 dx, 0.1/(1+a))."""
    if dt_user is not None:
        if not dt_user > 0:
            raise ValueError("dt must be positive")
        return float(dt_user)
    return min(0.25 * grid.dx, 0.1 / (1.0 + a))


def run(config, m: MaterialSet, y_monitor=None):
    """Run a harness configuration (see :class:`kvlab.harness.config.SimConfig`)."""
    return simulate(
        config.grid,
        config.initial_data(),
        m,
        config.params,
        T_star=config.T_star,
        dt=config.effective_dt,
        thresholds=config.thresholds,
        sample_stride=config.sample_stride,
        step_change_cap=config.step_change_cap,
        max_halvings=config.max_halvings,
        y_monitor=y_monitor,
    )
