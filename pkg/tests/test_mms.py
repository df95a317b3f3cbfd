from __future__ import annotations

import math

import numpy as np
import pytest

from kvlab.material import builtin_family
from kvlab.mms import Manufactured, run_mms
from kvlab.solver import Params


def test_mms_three_levels_converge():
    m = builtin_family("affine_tanh", gamma0=1.0, delta=0.3)
    report = run_mms(1.0, m, Params(1.0, 1.0), levels=3, n0=9, T=0.1)
    assert report.passed
    for name in ("u", "v", "theta"):
        assert report.observed_order(name) >= 1.8
    assert report.to_csv().splitlines()[0] == "n,dx,dt,err_u,err_v,err_theta,order_u,order_v,order_theta"


def test_zero_data_without_forcing_stays_zero():
    m = builtin_family("constant", c=1.0)
    report = run_mms(1.0, m, Params(1.0, 1.0), levels=2, n0=9, T=0.05, zero_forcing=True)
    assert all(lv.err_u == lv.err_v == lv.err_theta == 0.0 for lv in report.levels)
    assert all(math.isnan(o) for o in report.orders["u"])


def test_forcing_matches_closed_form():
    # unit gamma, f = 0: the residuals are available by hand
    a, D, L = 1.3, 0.7, 2.0
    m = builtin_family("constant", c=1.0)
    mf = Manufactured(L, m, Params(a, D))
    x = np.linspace(0, L, 23)
    t = 0.4
    k = math.pi / L
    c, s = np.cos(k * x), np.sin(k * x)
    u = c * (1 + t)
    v = c * (1 + a * (1 + t))
    th = s * math.exp(-t)
    s_v_exact = a * c + k * k * v - a * v + a * a * u
    w = -k * s * (1 + a * (1 + t)) + a * k * s * (1 + t)  # v_x - a u_x
    F = np.sqrt(1 + th) - 1
    s_th_exact = -th + D * k * k * th - w * w - F * w
    s_v, s_th = mf.forcing(x, t)
    np.testing.assert_allclose(s_v, s_v_exact, atol=1e-8)
    np.testing.assert_allclose(s_th, s_th_exact, atol=1e-8)


def test_levels_must_allow_an_order():
    with pytest.raises(ValueError):
        run_mms(1.0, builtin_family("constant", c=1.0), Params(1.0, 1.0), levels=1)
