from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvlab.material import (
    MaterialError,
    MaterialSet,
    builtin_family,
    law_derivative,
    parse_law,
    sample_points,
    validate_material,
)


def _custom(F="(1+s)^0.5 - 1", gamma="1 + 0.5*tanh(s)", **kw):
    args = dict(
        gamma=parse_law(gamma), Gamma=parse_law("1"), f=parse_law("0"), F=parse_law(F),
        gamma_lo=1.0, gamma_hi=2.0, C_F=1.0, alpha=0.5, lip_gamma=0.5, lip_f=0.0,
    )
    args.update(kw)
    return MaterialSet(**args)


def test_tanh_material_passes_and_estimates_lipschitz():
    report = validate_material(_custom(), s_max=100, n_samples=20001)
    assert report.passed
    assert report.lip_gamma_est == pytest.approx(0.5, abs=1e-3)
    assert report.check("F_zero").passed and report.check("F_growth").passed


def test_linear_F_fails_growth_with_witness_near_s_max():
    report = validate_material(_custom(F="s"), s_max=100, n_samples=2001)
    assert not report.passed
    check = report.check("F_growth")
    assert not check.passed
    assert check.witness_s == pytest.approx(100.0)
    assert check.witness_value == pytest.approx(100 - math.sqrt(101))


def test_every_failure_has_a_witness():
    m = _custom(gamma="0.5 + 2*tanh(s)", F="1 + s")
    report = validate_material(m, s_max=10, n_samples=501)
    failed = [c for c in report.checks if not c.passed]
    assert {c.name for c in failed} >= {"gamma_lo", "gamma_hi", "F_zero"}
    for c in failed:
        assert c.witness_s is not None and c.witness_value is not None


def test_gamma_lo_witness_is_worst_point():
    report = validate_material(_custom(gamma="0.5 + 0.5*tanh(s)"), s_max=10, n_samples=101)
    check = report.check("gamma_lo")
    assert check.witness_s == 0.0 and check.witness_value == pytest.approx(0.5)


def test_evaluation_error_becomes_failure():
    report = validate_material(_custom(F="ln(s)"), s_max=5, n_samples=11)
    assert not report.passed
    assert report.check("F_eval").witness_s == 0.0


def test_lipschitz_excess_is_only_advisory():
    report = validate_material(_custom(lip_gamma=0.1), s_max=10, n_samples=2001)
    assert report.passed
    assert not report.check("lip_gamma").passed
    assert "warn" in report.to_text()


def test_csv_rows():
    text = validate_material(_custom(F="s"), s_max=100, n_samples=101).to_csv()
    lines = text.splitlines()
    assert lines[0] == "hypothesis,verdict,advisory,bound,witness_s,witness_value,s_max,n_samples"
    assert any(line.startswith("F_growth,fail,0,") for line in lines)
    assert text.endswith("\n") and "\r" not in text


def test_builtin_families():
    m = builtin_family("affine_tanh", gamma0=1.0, delta=0.1)
    assert (m.gamma_lo, m.gamma_hi, m.lip_gamma) == (1.0, 1.1, 0.1)
    c = builtin_family("constant", c=1.0)
    assert c.gamma_lo == c.gamma_hi == 1.0 and c.lip_gamma == 0.0
    p = builtin_family("power_sublinear", C_F=2.0, alpha=0.3)
    assert p.F(0.0) == 0.0
    assert p.F(3.0) == pytest.approx(2.0 * (4.0**0.3 - 1))


@pytest.mark.parametrize(
    "name, params",
    [("affine_tanh", dict(gamma0=1.0, delta=-0.1)), ("constant", dict(c=1.0, alpha=1.5)), ("nope", {}),
     ("constant", dict(c=1.0, extra=2.0))],
)
def test_builtin_family_errors(name, params):
    with pytest.raises(MaterialError):
        builtin_family(name, **params)


@pytest.mark.parametrize("bad", [dict(alpha=1.0), dict(gamma_lo=3.0), dict(C_F=0.0), dict(lip_f=-1.0), dict(gamma_lo=0.0)])
def test_materialset_invariants(bad):
    with pytest.raises(MaterialError):
        _custom(**bad)


@settings(max_examples=25, deadline=None)
@given(
    family=st.sampled_from(["affine_tanh", "power_sublinear", "constant"]),
    g0=st.floats(0.1, 10),
    delta=st.floats(0, 5),
    C_F=st.floats(0.1, 5),
    alpha=st.floats(0.01, 0.99),
    s_max=st.floats(1e-3, 1e6),
)
def test_builtin_families_always_validate(family, g0, delta, C_F, alpha, s_max):
    kw = {"affine_tanh": dict(gamma0=g0, delta=delta), "power_sublinear": dict(gamma0=g0), "constant": dict(c=g0)}[family]
    m = builtin_family(family, C_F=C_F, alpha=alpha, **kw)
    report = validate_material(m, s_max=s_max, n_samples=301)
    assert report.passed, report.to_text()


def test_sampled_derivative_sup_converges():
    delta = 0.7
    m = builtin_family("affine_tanh", gamma0=1.0, delta=delta)
    report = validate_material(m, s_max=50, n_samples=100_000)
    assert abs(report.lip_gamma_est - delta) <= 1e-3


def test_law_derivative_matches_closed_form():
    s = np.array([0.0, 1e-9, 0.3, 2.0, 40.0])
    d = law_derivative(parse_law("0.5*tanh(s)"), s)
    np.testing.assert_allclose(d, 0.5 / np.cosh(s) ** 2, rtol=1e-7, atol=1e-12)


def test_sample_points_cover_window():
    s = sample_points(100.0, 11)
    assert s[0] == 0.0 and s[-1] == 100.0 and np.all(np.diff(s) > 0)
