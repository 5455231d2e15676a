import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import integrate

from conftest import random_odd_field
from sqgwave.grid import GridSpec, make_grid
from sqgwave.nehari import (NEHARI_TOL, NoNehariPoint, energy, euler_gradient, g_of_t, nehari_functional,
                            nehari_scale, potential, project_nehari)
from sqgwave.profile import SymmetryError, WaveParams
from sqgwave.symmetry import dagger

# test-only parameters outside the admissible range c, k > 0
ZERO_WAVE = SimpleNamespace(c=0.0, k=0.0)


def _nehari_points(ws, p, wave, n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        psi = random_odd_field(ws, rng) - 0.3 * random_odd_field(ws, rng)
        yield nehari_scale(ws, psi, p, wave) * psi


def test_energy_zero(ws32, bump, wave):
    assert energy(ws32, np.zeros(ws32.grid.shape), bump, wave) == (0.0, 0.0)


def test_energy_below_cutoff(ws32, bump):
    wave = WaveParams(1.0, 0.5)
    psi = 0.4 * np.sin(np.pi * ws32.r / ws32.grid.Lr)
    E, V = energy(ws32, psi, bump, wave)
    assert V == 0.0
    assert E == 0.5 * ws32.x_norm2(psi)


def test_energy_requires_odd(ws32, bump, wave):
    with pytest.raises(SymmetryError):
        energy(ws32, np.ones(ws32.grid.shape), bump, wave)


def test_potential_quadrature_oracle(quad):
    ws = make_grid(GridSpec(128, 128, 2.0, 2.0))
    wave = WaveParams(1.0, 0.2)
    A, r0, s = 3.0, 0.8, 0.35
    psi_fn = lambda r, z: A * (math.exp(-((r - r0) ** 2 + z * z) / s**2) - math.exp(-((r + r0) ** 2 + z * z) / s**2))
    psi = A * (np.exp(-((ws.r - r0) ** 2 + ws.z**2) / s**2) - np.exp(-((ws.r + r0) ** 2 + ws.z**2) / s**2))
    integrand = lambda z, r: max(psi_fn(r, z) - wave.c * r - wave.k, 0.0) ** 3 / 3.0
    ref = integrate.dblquad(integrand, 0.0, 2.0, -2.0, 2.0, epsabs=1e-10, epsrel=1e-8)[0]
    assert potential(ws, psi, quad, wave) == pytest.approx(ref, rel=1e-4)


def test_gradient_below_cutoff(ws32, bump):
    wave = WaveParams(1.0, 0.5)
    psi = 0.4 * np.sin(np.pi * ws32.r / ws32.grid.Lr)
    np.testing.assert_array_equal(euler_gradient(ws32, psi, bump, wave), psi)


def test_gradient_manufactured(ws32):
    rng = np.random.default_rng(0)
    theta0 = random_odd_field(ws32, rng)
    psi = ws32.riesz_inverse(theta0)
    # a profile that returns theta0 on the right half makes psi an exact critical point
    h = ws32.grid.nr // 2
    fixed = SimpleNamespace(f=lambda s: theta0[h:])
    G = euler_gradient(ws32, psi, fixed, WaveParams(1.0, 0.1))
    assert np.max(np.abs(G)) < 1e-14 * np.max(np.abs(psi))


def test_gradient_finite_differences(ws64, bump, wave):
    rng = np.random.default_rng(7)
    psi = next(_nehari_points(ws64, bump, wave, 1, 11))
    G = euler_gradient(ws64, psi, bump, wave)
    for _ in range(3):
        hdir = random_odd_field(ws64, rng)
        exact = ws64.x_inner(G, hdir)
        errs = []
        for eps in (1e-3, 1e-4):
            fd = (energy(ws64, psi + eps * hdir, bump, wave)[0] - energy(ws64, psi - eps * hdir, bump, wave)[0]) / (2 * eps)
            errs.append(abs(fd - exact))
        assert errs[0] / errs[1] == pytest.approx(100, rel=0.2)


def test_gradient_exactness(ws64, bump, wave):
    for psi in _nehari_points(ws64, bump, wave, 5, 12):
        psi = 1.3 * dagger(psi)
        G = euler_gradient(ws64, psi, bump, wave)
        lhs = ws64.x_inner(G, psi)
        assert lhs == pytest.approx(nehari_functional(ws64, psi, bump, wave), rel=1e-10)
        assert lhs == pytest.approx(2 * g_of_t(ws64, psi, bump, wave, 1.0)[0], rel=1e-10)


def test_g_small_t_limit(ws64, bump, wave):
    rng = np.random.default_rng(8)
    psi = random_odd_field(ws64, rng)
    X = ws64.x_norm2(psi)
    g, _ = g_of_t(ws64, psi, bump, wave, 1e-8 / np.max(psi))
    assert g == pytest.approx(0.5 * X, rel=1e-10)


def test_g_rejects_nonpositive_t(ws32, bump, wave):
    with pytest.raises(ValueError):
        g_of_t(ws32, np.zeros(ws32.grid.shape), bump, wave, 0.0)


def test_g_linear_for_quadratic(ws64, quad):
    rng = np.random.default_rng(9)
    psi = random_odd_field(ws64, rng) - 0.4 * random_odd_field(ws64, rng)
    h = ws64.grid.nr // 2
    cube = ws64.integrate(np.maximum(psi[h:], 0.0) ** 3)
    X = ws64.x_norm2(psi)
    for t in (0.1, 0.7, 3.0):
        g, dg = g_of_t(ws64, psi, quad, ZERO_WAVE, t)
        assert g == pytest.approx(0.5 * X - t * cube, rel=1e-12, abs=1e-12 * X)
        assert dg == pytest.approx(-cube, rel=1e-12)


def test_closed_form_scale_quadratic(ws64, quad):
    rng = np.random.default_rng(10)
    h = ws64.grid.nr // 2
    for _ in range(5):
        psi = random_odd_field(ws64, rng) - 0.4 * random_odd_field(ws64, rng)
        cube = ws64.integrate(np.maximum(psi[h:], 0.0) ** 3)
        t = nehari_scale(ws64, psi, quad, ZERO_WAVE)
        assert t == pytest.approx(ws64.x_norm2(psi) / (2 * cube), rel=1e-10)


def test_scale_fixed_point(ws64, bump, wave):
    for psi in _nehari_points(ws64, bump, wave, 3, 13):
        assert nehari_scale(ws64, psi, bump, wave) == pytest.approx(1.0, abs=1e-10)
        assert abs(nehari_functional(ws64, psi, bump, wave)) <= NEHARI_TOL * ws64.x_norm2(psi)


def test_root_sign_structure(ws64, bump, wave):
    rng = np.random.default_rng(14)
    for _ in range(100):
        psi = random_odd_field(ws64, rng) - 0.3 * random_odd_field(ws64, rng)
        t = nehari_scale(ws64, psi, bump, wave)
        g, dg = g_of_t(ws64, psi, bump, wave, t)
        assert dg < 0
        for s in (0.25, 0.5, 0.9):
            assert g_of_t(ws64, psi, bump, wave, s * t)[0] > 0
        for s in (1.1, 2.0, 8.0):
            assert g_of_t(ws64, psi, bump, wave, s * t)[0] < 0


def test_energy_maximal_on_ray(ws64, bump, wave):
    for psi in _nehari_points(ws64, bump, wave, 5, 15):
        ts = np.logspace(-1, 1, 50)
        Es = [energy(ws64, t * psi, bump, wave)[0] for t in ts]
        i = int(np.argmax(Es))
        assert ts[max(i - 1, 0)] <= 1.0 <= ts[min(i + 1, 49)]


def test_bound_and_quadratic_identity(ws64, bump, quad, wave):
    h = ws64.grid.nr // 2
    for psi in _nehari_points(ws64, bump, wave, 10, 16):
        E, _ = energy(ws64, psi, bump, wave)
        X = ws64.x_norm2(psi)
        assert X <= 6 * E + 1e-10 * X
    for psi in _nehari_points(ws64, quad, wave, 10, 17):
        E, _ = energy(ws64, psi, quad, wave)
        X = ws64.x_norm2(psi)
        cutoff = wave.c * ws64.r[h:] + wave.k
        ident = X / 6 + 2 / 3 * ws64.integrate(cutoff * quad.f(psi[h:] - cutoff))
        assert E == pytest.approx(ident, rel=1e-10)


def test_no_nehari_point_for_nonpositive(ws32, bump, wave):
    psi = -np.abs(np.sin(np.pi * ws32.r / ws32.grid.Lr)) * np.sign(ws32.r)
    with pytest.raises(NoNehariPoint):
        nehari_scale(ws32, psi, bump, wave)


def test_project_nehari(ws64, bump, wave):
    rng = np.random.default_rng(18)
    pt = project_nehari(ws64, random_odd_field(ws64, rng), bump, wave)
    assert pt.t_scale > 0 and pt.energy > 0
    assert abs(pt.nehari_residual) <= NEHARI_TOL * ws64.x_norm2(pt.psi)
    assert pt.energy >= ws64.x_norm2(pt.psi) / 6 - 1e-10 * ws64.x_norm2(pt.psi)
