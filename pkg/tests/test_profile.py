import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from sqgwave.grid import GridSpec, make_grid
from sqgwave.profile import (ProfileError, SymmetryError, WaveParams, make_profile, profile_eval,
                             theta_from_psi, validate_hypotheses)


def test_bump_third_derivative_midpoint():
    p = make_profile("bump", 0.0, 1.0, 1.0)
    assert p.d3f(0.5) == pytest.approx(1 / 64, rel=1e-14)


def test_quadratic_values():
    q = make_profile("quadratic")
    f, df, F = profile_eval(q, 2.0)
    assert (f, df, F) == (4.0, 4.0, pytest.approx(8 / 3, rel=1e-15))
    f, df, F = profile_eval(q, 1.0)
    assert (f, df) == (1.0, 2.0) and F == pytest.approx(1 / 3, rel=1e-15)


@pytest.mark.parametrize("kind", ["bump", "quadratic"])
def test_vanishes_exactly_for_nonpositive(kind):
    p = make_profile(kind)
    s = np.concatenate([[-3.0, -1e-300, 0.0], -np.logspace(-300, 3, 50)])
    for v in profile_eval(p, s):
        assert np.all(v == 0.0)


def test_default_normalisation():
    p = make_profile()
    assert float(p.f(1.0)) == pytest.approx(1.0, rel=1e-14)
    assert p.amp == pytest.approx(1008.0, rel=1e-12)


def test_bump_tail_closed_form():
    """Beyond b: f = f(b) + f'(b)(s-b) + f''(b)(s-b)^2/2 with the Beta-function moments of u^3(1-u)^3."""
    amp = 5.0
    p = make_profile("bump", 0.0, 1.0, amp)
    B = lambda x, y: math.gamma(x) * math.gamma(y) / math.gamma(x + y)
    f2, f1, f0 = amp * B(4, 4), amp * B(4, 5), amp * B(4, 6) / 2
    s = np.array([1.5, 3.0, 10.0, 77.0])
    ref = f0 + f1 * (s - 1) + f2 * (s - 1) ** 2 / 2
    np.testing.assert_allclose(p.f(s), ref, rtol=1e-13)
    # default amplitude: f(s) = 3.6 s^2 - 3.6 s + 1 beyond b = 1
    d = make_profile()
    np.testing.assert_allclose(d.f(s), 3.6 * s**2 - 3.6 * s + 1.0, rtol=1e-12)


def test_bump_growth_slope():
    p = make_profile()
    s = np.logspace(1, 2, 200)
    slope = np.polyfit(np.log(s), np.log(p.f(s)), 1)[0]
    # least-squares slope of log(3.6 s^2 - 3.6 s + 1) on the same log-spaced sample
    oracle = np.polyfit(np.log(s), np.log(3.6 * s**2 - 3.6 * s + 1.0), 1)[0]
    assert slope == pytest.approx(oracle, abs=1e-10)
    # the local exponent s f'/f tends to 2
    big = 1e7
    assert big * float(p.df(big)) / float(p.f(big)) == pytest.approx(2.0, abs=1e-6)


def test_primitive_against_quadrature():
    p = make_profile("bump", 0.0, 1.0, 1.0)
    ref = integrate.quad(lambda x: float(p.f(x)), 0.0, 2.0, epsabs=1e-14, epsrel=1e-12, points=[1.0])[0]
    assert float(p.F(2.0)) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 50.0), st.sampled_from(["bump", "quadratic"]))
def test_finite_difference_consistency(s, kind):
    p = make_profile(kind)
    h = 1e-5
    dF = (float(p.F(s + h)) - float(p.F(s - h))) / (2 * h)
    df = (float(p.f(s + h)) - float(p.f(s - h))) / (2 * h)
    assert dF == pytest.approx(float(p.f(s)), rel=1e-6, abs=1e-12)
    assert df == pytest.approx(float(p.df(s)), rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("kw", [dict(a=1.0, b=1.0), dict(a=2.0, b=1.0), dict(amp=0.0), dict(amp=-1.0),
                                dict(a=-0.5)])
def test_make_profile_rejects(kw):
    with pytest.raises(ProfileError):
        make_profile("bump", **kw)


def test_unknown_kind():
    with pytest.raises(ProfileError):
        make_profile("cubic")


@pytest.mark.parametrize("c,k", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (math.nan, 1.0)])
def test_wave_params_positive(c, k):
    with pytest.raises(ValueError):
        WaveParams(c, k)


def test_validate_default_bump():
    rep = validate_hypotheses(make_profile())
    assert rep.passed, rep.checks
    assert rep.fitted_nu < 3


def test_validate_quartic_fails_growth():
    quartic = SimpleNamespace(
        f=lambda s: np.maximum(s, 0) ** 4, df=lambda s: 4 * np.maximum(s, 0) ** 3,
        d3f=lambda s: 24 * np.maximum(s, 0), F=lambda s: np.maximum(s, 0) ** 5 / 5)
    rep = validate_hypotheses(quartic)
    assert not rep.checks["H4_growth"]
    assert rep.fitted_nu == pytest.approx(4.0, abs=1e-6)


def test_validate_quadratic_equality_case():
    q = make_profile("quadratic")
    s = np.logspace(-6, 3, 500)
    assert np.all(s * q.df(s) - 2 * q.f(s) == 0.0)
    assert validate_hypotheses(q).passed


@pytest.fixture(scope="module")
def ws():
    return make_grid(GridSpec(16, 16, 2.0, 2.0))


def test_theta_below_cutoff(ws):
    psi = 0.05 * (ws.r / 2.0)
    assert not np.any(theta_from_psi(ws, psi, make_profile(), WaveParams(1.0, 0.1)))


def test_theta_quadratic_point_value(ws):
    i, j = 11, 5
    x0 = ws.r1[i]
    psi = np.zeros(ws.grid.shape)
    w = WaveParams((1.0 - 0.2) / x0, 0.2)  # c r + k = 1 at the probe node
    psi[i, j] = 3.0
    psi[ws.grid.nr - 1 - i, j] = -3.0
    th = theta_from_psi(ws, psi, make_profile("quadratic"), w)
    assert th[i, j] == pytest.approx(4.0, rel=1e-14)


def test_theta_odd_and_nonnegative(ws, rng):
    from conftest import random_odd_field
    psi = random_odd_field(ws, rng, amp=(2, 6))
    th = theta_from_psi(ws, psi, make_profile(), WaveParams(1.0, 0.1))
    assert np.array_equal(th[::-1], -th)
    assert np.all(th[ws.right] >= 0)


def test_theta_requires_odd(ws):
    psi = np.ones(ws.grid.shape)
    with pytest.raises(SymmetryError):
        theta_from_psi(ws, psi, make_profile(), WaveParams(1.0, 0.1))
