from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvlab.grid import (
    DIRICHLET0,
    NEUMANN,
    Field,
    Grid,
    dx1,
    flux_div,
    functional_pack,
    trapezoid,
)


def _slope(errors, sizes):
    return -np.polyfit(np.log(sizes), np.log(errors), 1)[0]


def test_grid_basics():
    g = Grid(2.0, 5)
    assert g.dx == 0.5
    np.testing.assert_array_equal(g.x, [0, 0.5, 1.0, 1.5, 2.0])
    with pytest.raises(ValueError):
        Grid(1.0, 2)
    with pytest.raises(ValueError):
        Grid(0.0, 10)


def test_field_invariants():
    with pytest.raises(ValueError):
        Field(np.array([1.0, 0.0, 0.0]), DIRICHLET0)
    with pytest.raises(ValueError):
        Field(np.zeros(3), "periodic")
    f = Field(np.zeros(3), NEUMANN)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_dx1_second_order_both_conditions():
    sizes, errs_n, errs_d = [], [], []
    for n in (33, 65, 129, 257):
        g = Grid(1.0, n)
        x = g.x
        errs_n.append(np.max(np.abs(dx1(Field(np.cos(np.pi * x)), g) + np.pi * np.sin(np.pi * x))))
        th = np.sin(np.pi * x)
        th[0] = th[-1] = 0.0
        errs_d.append(np.max(np.abs(dx1(Field(th, DIRICHLET0), g) - np.pi * np.cos(np.pi * x))))
        sizes.append(g.dx)
    assert _slope(errs_n, 1 / np.array(sizes)) >= 1.9
    assert _slope(errs_d, 1 / np.array(sizes)) >= 1.9


def test_neumann_derivative_vanishes_at_ends():
    g = Grid(1.0, 11)
    d = dx1(Field(g.x**3), g)
    assert d[0] == 0.0 and d[-1] == 0.0


def test_flux_div_second_order_and_conservative():
    errs, ns = [], []
    for n in (33, 65, 129, 257):
        g = Grid(1.0, n)
        x = g.x
        c = 1.0 + 0.5 * x
        w = np.cos(np.pi * x)
        exact = -0.5 * np.pi * np.sin(np.pi * x) - (1 + 0.5 * x) * np.pi**2 * np.cos(np.pi * x)
        out = flux_div(c, Field(w), g)
        errs.append(np.max(np.abs(out[1:-1] - exact[1:-1])))
        ns.append(n - 1)
        # telescoping sum: trapezoid of the divergence vanishes for Neumann fields
        assert abs(trapezoid(out, g)) < 1e-9
    assert _slope(errs, np.array(ns)) >= 1.9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=5, max_size=40), st.floats(0.1, 5))
def test_flux_div_conservation_property(values, length):
    g = Grid(length, len(values))
    coef = 1.0 + np.abs(np.asarray(values)) * 0.1
    out = flux_div(coef, Field(np.asarray(values)), g)
    assert abs(trapezoid(out, g)) <= 1e-9 * (1 + np.max(np.abs(out)) * length)


def test_flux_div_rejects_bad_coefficients():
    g = Grid(1.0, 5)
    with pytest.raises(ValueError):
        flux_div(np.array([1.0, -1.0, 1.0, 1.0, 1.0]), Field(np.zeros(5)), g)
    with pytest.raises(ValueError):
        flux_div(np.ones(3), Field(np.zeros(5)), g)


def test_trapezoid():
    g = Grid(1.0, 401)
    assert trapezoid(np.sin(np.pi * g.x) ** 2, g) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        trapezoid(np.ones(3), g)


def test_functional_pack_closed_forms():
    g = Grid(1.0, 801)
    x = g.x
    u = np.cos(np.pi * x)
    th = np.sin(np.pi * x)
    th[0] = th[-1] = 0.0
    pk = functional_pack(Field(u), Field(2 * u), Field(th, DIRICHLET0), g)
    p2, p4 = math.pi**2 / 2, 3 * math.pi**4 / 8
    assert pk.int_ux2 == pytest.approx(p2, rel=1e-4)
    assert pk.int_ux4 == pytest.approx(p4, rel=1e-4)
    assert pk.int_vx2 == pytest.approx(4 * p2, rel=1e-4)
    assert pk.int_vx4 == pytest.approx(16 * p4, rel=1e-4)
    assert pk.int_thx2 == pytest.approx(p2, rel=1e-4)
    assert pk.linf_theta == pytest.approx(1.0) and pk.theta_min == 0.0
    assert set(pk.as_dict()) == {"int_ux2", "int_ux4", "int_vx2", "int_vx4", "int_thx2", "linf_theta", "theta_min"}
