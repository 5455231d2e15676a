"""Energy, its X-metric gradient, the fibre map along rays and the Nehari rescaling.

Along the ray ``t -> t Psi`` we use

    g(t) = E'(t Psi)(t Psi) / (2 t^2) = ||Psi||_X^2 / 2 - (1/t) int_H f(t Psi^+ - c r - k) Psi^+

so that g(0+) = ||Psi||_X^2 / 2, t g(t) = dE(t Psi)/dt / 2 and the zero of g is
the unique t with t Psi on the Nehari set {||Psi||_X^2 = 2 int_H f(Psi - c r - k) Psi}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import SpectralWorkspace
from .profile import Profile, WaveParams, require_odd, theta_from_psi

NEHARI_TOL = 1e-10
T_MAX = 1e9


class NoNehariPoint(RuntimeError):
    pass


@dataclass
class NehariPoint:
    psi: np.ndarray
    t_scale: float
    energy: float
    nehari_residual: float


def potential(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams) -> float:
    """V = int_H F(Psi - c r - k)."""
    h = ws.grid.nr // 2
    return ws.integrate(p.F(psi[h:] - wave.c * ws.r[h:] - wave.k))


def energy(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
           check: bool = True) -> tuple[float, float]:
    """Return ``(E, V)`` with E = ||Psi||_X^2 / 2 - 2 V."""
    psi = ws.check(psi)
    if check:
        require_odd(ws, psi)
    V = potential(ws, psi, p, wave)
    return 0.5 * ws.x_norm2(psi) - 2.0 * V, V


def nehari_functional(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams) -> float:
    """E'(Psi)(Psi) = ||Psi||_X^2 - 2 int_H f(Psi - c r - k) Psi."""
    h = ws.grid.nr // 2
    fr = p.f(psi[h:] - wave.c * ws.r[h:] - wave.k)
    return ws.x_norm2(psi) - 2.0 * ws.integrate(fr * psi[h:])


def euler_gradient(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
                   check: bool = True) -> np.ndarray:
    """X-metric gradient Psi - (-Delta)^(-1/2) Theta(Psi)."""
    theta = theta_from_psi(ws, psi, p, wave, check=check)
    return psi - ws.riesz_inverse(theta)


class _Ray:
    """Cached pieces of g(t) for a fixed direction Psi."""

    def __init__(self, ws, psi, p, wave, xnorm2=None):
        h = ws.grid.nr // 2
        plus = np.maximum(psi[h:], 0.0)
        self.sel = plus > 0
        self.u = plus[self.sel]
        self.shift = (wave.c * ws.r[h:] + wave.k)[self.sel]
        self.p = p
        self.dA = ws.grid.cell_area
        self.X = ws.x_norm2(psi) if xnorm2 is None else xnorm2

    def S(self, t):
        w = t * self.u - self.shift
        return float(np.sum(self.p.f(w) * self.u)) * self.dA

    def g(self, t):
        w = t * self.u - self.shift
        S = float(np.sum(self.p.f(w) * self.u)) * self.dA
        S1 = float(np.sum(self.p.df(w) * self.u**2)) * self.dA
        g = 0.5 * self.X - S / t
        dg = S / t**2 - S1 / t
        return g, dg


def g_of_t(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
           t: float) -> tuple[float, float]:
    """Fibre map g(t) and its derivative, with t^2 g'(t) = int_H (f - t Psi^+ f') Psi^+."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    return _Ray(ws, ws.check(psi), p, wave).g(t)


def nehari_scale(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
                 xnorm2: float | None = None, t0: float = 1.0, maxiter: int = 200) -> float:
    """Unique t > 0 with t Psi on the Nehari set.

    Geometric bracket expansion followed by Newton steps safeguarded by bisection.
    """
    ray = _Ray(ws, ws.check(psi), p, wave, xnorm2)
    if ray.u.size == 0:
        raise NoNehariPoint("positive part of the field vanishes on the right half plane")
    if not ray.X > 0:
        raise NoNehariPoint("field has zero X-norm")
    tol = 1e-12 * ray.X
    lo = hi = None
    t = t0
    g, dg = ray.g(t)
    if g > 0:
        lo = t
        while True:
            t *= 2.0
            if t > T_MAX:
                raise NoNehariPoint(f"cutoff not reached for any scale up to {T_MAX:g}")
            g, dg = ray.g(t)
            if g <= 0:
                hi = t
                break
            lo = t
    else:
        hi = t
        while True:
            t *= 0.5
            if t < 1e-300:
                raise NoNehariPoint("no positive scale found below the initial guess")
            g, dg = ray.g(t)
            if g > 0:
                lo = t
                break
            hi = t
    t = 0.5 * (lo + hi) if abs(g) > tol else t
    best_t, best_g = t, math.inf
    for _ in range(maxiter):
        g, dg = ray.g(t)
        if abs(g) < abs(best_g):
            best_t, best_g = t, g
        if abs(g) <= tol:
            return t
        if g > 0:
            lo = t
        else:
            hi = t
        step = t - g / dg if dg < 0 else math.nan
        t = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            break
    if abs(best_g) <= 1e-10 * ray.X:
        return best_t
    raise NoNehariPoint(f"root finder stalled with |g| = {abs(best_g):.3e}")


def project_nehari(ws, psi, p, wave) -> NehariPoint:
    t = nehari_scale(ws, psi, p, wave)
    out = t * psi
    E, _ = energy(ws, out, p, wave, check=False)
    return NehariPoint(out, t, E, nehari_functional(ws, out, p, wave))
