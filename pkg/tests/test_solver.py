from __future__ import annotations

import math

import numpy as np
import pytest

from kvlab import kernels
from kvlab.grid import Grid
from kvlab.material import MaterialSet, builtin_family, parse_law
from kvlab.solver import (
    BLOWUP,
    REACHED_T,
    STEP_FAILURE,
    InitialData,
    InitialDataError,
    Params,
    StepFailure,
    Thresholds,
    default_dt,
    init_state,
    mass,
    simulate,
    step,
)

UNIT = builtin_family("constant", c=1.0)


def _laws(grid, u0, u0t, th0):
    return InitialData.from_laws(grid, parse_law(u0, "x"), parse_law(u0t, "x"), parse_law(th0, "x"))


def _coupled_material():
    return MaterialSet(
        parse_law("1 + 0.3*tanh(s)"), parse_law("1"), parse_law("0.5*s/(1+s)^0.5"), parse_law("(1+s)^0.5 - 1"),
        1.0, 1.3, 1.0, 0.5, 0.3, 0.5,
    )


def test_stationary_state_is_exact():
    g = Grid(1.0, 128)
    p = Params(2.0, 1.0)
    data = InitialData(np.full(g.n, 0.7), np.zeros(g.n), np.zeros(g.n))
    traj, verdict = simulate(g, data, UNIT, p, T_star=1.0, dt=default_dt(g, p.a), sample_stride=50)
    s = traj.final_state
    assert verdict.kind == REACHED_T and verdict.t_end == 1.0
    assert np.max(np.abs(s.u - 0.7)) <= 1e-12
    assert np.max(np.abs(s.v - 1.4)) <= 1e-12
    assert np.max(np.abs(s.theta)) <= 1e-12


def _heat_error(n, dt, T=0.1):
    g = Grid(1.0, n)
    th0 = np.sin(np.pi * g.x)
    th0[0] = th0[-1] = 0.0
    traj, _ = simulate(g, InitialData(np.zeros(n), np.zeros(n), th0), UNIT, Params(1.0, 1.0), T_star=T, dt=dt, sample_stride=10**9)
    exact = math.exp(-math.pi**2 * T) * np.sin(np.pi * g.x)
    return float(np.max(np.abs(traj.final_state.theta - exact)))


def test_heat_decay_second_order():
    e1, e2 = _heat_error(51, 1.6e-4), _heat_error(101, 4e-5)
    assert e2 <= 5e-3
    assert 3.0 <= e1 / e2 <= 5.0


def test_final_step_lands_on_T():
    g = Grid(1.0, 33)
    data = InitialData(np.zeros(33), np.zeros(33), np.zeros(33))
    traj, verdict = simulate(g, data, UNIT, Params(1.0, 1.0), T_star=0.25, dt=0.07)
    assert traj.t[-1] == 0.25 and verdict.t_end == 0.25
    assert len(traj) == 5


def test_mass_identity_with_variable_coefficients():
    g = Grid(1.0, 200)
    p = Params(1.5, 0.7)
    data = _laws(g, "cos(pi*x)", "0.5*cos(2*pi*x) + 0.3", "sin(pi*x)*(1 + x)")
    traj, verdict = simulate(g, data, _coupled_material(), p, T_star=0.5, dt=default_dt(g, p.a), sample_stride=5)
    assert verdict.kind == REACHED_T
    m = traj.column("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-10 * (1 + abs(m[0]))
    assert traj.column("theta_min").min() >= -1e-10


def test_mass_helper_matches_definition():
    g = Grid(1.0, 11)
    data = InitialData(g.x * 0 + 2.0, np.ones(11), np.zeros(11))
    s = init_state(data, Params(3.0, 1.0))
    # v - a u = u0t
    assert mass(s, g, 3.0) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "u0, u0t, th0, message",
    [
        ("x", "0", "0", "Neumann"),
        ("0", "x^2", "0", "Neumann"),
        ("0", "0", "1 + x", "vanish"),
        ("0", "0", "-sin(pi*x)", "negative"),
    ],
)
def test_incompatible_initial_data(u0, u0t, th0, message):
    with pytest.raises(InitialDataError, match=message):
        _laws(Grid(1.0, 33), u0, u0t, th0)


def test_grid_level_compatibility_check():
    g = Grid(1.0, 65)
    good = InitialData(np.cos(np.pi * g.x), np.zeros(65), np.zeros(65))
    good.validate(g)
    bad = InitialData(g.x.copy(), np.zeros(65), np.zeros(65))
    with pytest.raises(InitialDataError):
        bad.validate(g)
    with pytest.raises(InitialDataError):
        InitialData(np.zeros(64), np.zeros(65), np.zeros(65)).validate(g)


def test_nonpositive_gamma_is_step_failure():
    m = MaterialSet(parse_law("1 - s"), parse_law("0"), parse_law("0"), parse_law("0"), 0.1, 1.0, 1.0, 0.5)
    g = Grid(1.0, 17)
    th = 2 * np.sin(np.pi * g.x)
    th[0] = th[-1] = 0.0
    s = init_state(InitialData(np.zeros(17), np.zeros(17), th), Params(1.0, 1.0))
    with pytest.raises(StepFailure, match="gamma"):
        step(s, 1e-3, m, Params(1.0, 1.0), g)


def test_oversized_step_reports_failure():
    g = Grid(1.0, 65)
    data = _laws(g, "0", "5*cos(2*pi*x)", "sin(pi*x)")
    traj, verdict = simulate(g, data, UNIT, Params(1.0, 1.0), T_star=1.0, dt=0.5, step_change_cap=0.5, max_halvings=3)
    assert verdict.kind == STEP_FAILURE
    assert "halvings" in verdict.detail
    assert verdict.t_end == 0.0


def test_halving_rescues_moderate_step():
    g = Grid(1.0, 65)
    data = _laws(g, "0", "2*cos(2*pi*x)", "sin(pi*x)")
    p = Params(1.0, 1.0)
    _, v0 = simulate(g, data, UNIT, p, T_star=0.2, dt=0.1, step_change_cap=0.3, max_halvings=0)
    _, v3 = simulate(g, data, UNIT, p, T_star=0.2, dt=0.1, step_change_cap=0.3, max_halvings=4)
    assert v0.kind == STEP_FAILURE and v3.kind == REACHED_T


def test_blowup_threshold_is_an_observation():
    g = Grid(1.0, 65)
    data = _laws(g, "0", "cos(pi*x)", "sin(pi*x)")
    traj, verdict = simulate(
        g, data, UNIT, Params(1.0, 1.0), T_star=1.0, dt=1e-3, thresholds=Thresholds(threshold_w12=0.5)
    )
    assert verdict.kind == BLOWUP and verdict.reason == "w12"
    assert verdict.t_end < 1.0 and traj.t[-1] == verdict.t_end


def test_default_dt_rule():
    g = Grid(1.0, 101)
    assert default_dt(g, 1.0) == pytest.approx(min(0.25 * 0.01, 0.05))
    assert default_dt(Grid(1.0, 3), 3.0) == pytest.approx(0.025)
    assert default_dt(g, 1.0, 0.3) == 0.3
    with pytest.raises(ValueError):
        default_dt(g, 1.0, -1.0)


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled kernels not built")
def test_backends_give_identical_trajectories():
    g = Grid(1.0, 64)
    p = Params(1.0, 1.0)
    data = _laws(g, "cos(pi*x)", "0.5*cos(2*pi*x)", "sin(pi*x)")
    finals = {}
    for name in kernels.available_backends():
        previous = kernels.use_backend(name)
        traj, _ = simulate(g, data, _coupled_material(), p, T_star=0.1, dt=1e-3)
        kernels.use_backend(previous)
        finals[name] = traj.final_state
    a, b = finals["compiled"], finals["python"]
    for name in ("u", "v", "theta"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_step_rejects_nonpositive_dt():
    g = Grid(1.0, 9)
    s = init_state(InitialData(np.zeros(9), np.zeros(9), np.zeros(9)), Params(1.0, 1.0))
    with pytest.raises(ValueError):
        step(s, 0.0, UNIT, Params(1.0, 1.0), g)
