"""The nonlinearity ``f`` and the ansatz map from stream function to scalar."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from .grid import SpectralWorkspace


class ProfileError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class WaveParams:
    c: float
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"wave speed c must be positive, got {self.c!r}")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"cutoff level k must be positive, got {self.k!r}")


def _bump_pieces(a: float, b: float, amp: float):
    """Polynomials in u = s - a for f''', f'', f', f and F on [a, b]."""
    w = b - a
    u = Polynomial([0.0, 1.0])
    p3 = amp * u**3 * (w - u) ** 3
    chain = [p3]
    for _ in range(4):
        chain.append(chain[-1].integ(lbnd=0.0))
    return chain  # f''', f'', f', f, F


@dataclass(frozen=True)
class Profile:
    """Piecewise-polynomial profile with f = f' = f'' = 0 at the origin.

    ``bump``: f''' = amp (s-a)^3 (b-s)^3 on [a, b], zero elsewhere.
    ``quadratic``: f = max(s, 0)^2.
    """

    kind: str = "bump"
    a: float = 0.0
    b: float = 1.0
    amp: float = 1.0
    nu: float = field(default=2.0, compare=False)

    @cached_property
    def _pieces(self):
        return _bump_pieces(self.a, self.b, self.amp)

    @cached_property
    def _tail(self):
        # values of f''', f'', f', f, F at s = b
        w = self.b - self.a
        return [float(p(w)) for p in self._pieces]

    def _eval(self, s, order: int) -> np.ndarray:
        """order 0: F, 1: f, 2: f', 3: f'', 4: f'''."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        if self.kind == "quadratic":
            pos = s > 0
            sp = s[pos]
            if order == 0:
                out[pos] = sp**3 / 3.0
            elif order == 1:
                out[pos] = sp**2
            elif order == 2:
                out[pos] = 2.0 * sp
            elif order == 3:
                out[pos] = 2.0
            return out
        a, b = self.a, self.b
        mid = (s > a) & (s <= b)
        hi = s > b
        poly = self._pieces[4 - order]
        out[mid] = poly(s[mid] - a)
        if np.any(hi) and order < 4:
            d = s[hi] - b
            # Taylor expansion from b; f''' vanishes beyond b
            acc = np.zeros_like(d)
            for j in range(4 - order):
                acc += self._tail[4 - order - j] * d**j / math.factorial(j)
            out[hi] = acc
        return out

    def f(self, s):
        return self._eval(s, 1)

    def df(self, s):
        return self._eval(s, 2)

    def d2f(self, s):
        return self._eval(s, 3)

    def d3f(self, s):
        return self._eval(s, 4)

    def F(self, s):
        return self._eval(s, 0)


def make_profile(kind: str = "bump", a: float = 0.0, b: float = 1.0, amp: float | None = None) -> Profile:
    """Build a profile; ``amp=None`` normalises the bump so that f(1) = 1."""
    if kind == "quadratic":
        return Profile(kind="quadratic", a=0.0, b=0.0, amp=1.0)
    if kind != "bump":
        raise ProfileError(f"unknown profile kind {kind!r}")
    if not (math.isfinite(a) and math.isfinite(b)) or a < 0 or b <= a:
        raise ProfileError(f"bump profile needs 0 <= a < b, got a={a}, b={b}")
    if amp is None:
        unit = Profile(kind="bump", a=a, b=b, amp=1.0)
        f1 = float(unit.f(1.0))
        if f1 <= 0:
            raise ProfileError("cannot normalise f(1) = 1 when a >= 1")
        amp = 1.0 / f1
    if not (math.isfinite(amp) and amp > 0):
        raise ProfileError(f"amp must be positive, got {amp!r}")
    return Profile(kind="bump", a=float(a), b=float(b), amp=float(amp))


def profile_eval(p: Profile, s):
    return p.f(s), p.df(s), p.F(s)


@dataclass
class HypothesisReport:
    checks: dict[str, bool]
    fitted_nu: float
    details: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def validate_hypotheses(p, s_max: float = 1e3, n: int = 2000) -> HypothesisReport:
    """Sample the profile on (0, s_max] and test the growth and convexity conditions.

    ``p`` only needs ``f``, ``df``, ``d3f`` and ``F`` callables.
    """
    s = np.logspace(-6, math.log10(s_max), n)
    f, df, F = p.f(s), p.df(s), p.F(s)
    d3 = p.d3f(s)
    neg = np.linspace(-10.0, 0.0, 101)
    scale = max(1.0, float(np.max(np.abs(s * f))))
    eps = 1e-12 * scale
    h2 = bool(np.all(p.f(neg) == 0.0) and np.all(p.F(neg) == 0.0) and np.all(p.df(neg) == 0.0))
    h3 = bool(np.all(d3 >= -eps))
    dertierce = s * df - 2.0 * f
    integrated = s * f - 3.0 * F
    top = s >= s_max / 10.0
    good = top & (f > 0)
    if np.count_nonzero(good) >= 2:
        nu = float(np.polyfit(np.log(s[good]), np.log(f[good]), 1)[0])
    else:
        nu = float("nan")
    checks = {
        "H1_nontrivial": bool(np.any(f != 0.0) and np.all(np.isfinite(f))),
        "H2_vanish_negative": h2,
        "H3_third_derivative": h3,
        "H4_growth": bool(math.isfinite(nu) and nu < 3.0),
        "dertierce": bool(np.all(dertierce >= -eps)),
        "zf_minus_3F": bool(np.all(integrated >= -eps)),
        "monotone": bool(np.all(df >= -eps) and np.all(np.diff(f) >= -eps)),
    }
    details = {
        "min_dertierce": float(dertierce.min()),
        "min_zf_minus_3F": float(integrated.min()),
        "min_d3f": float(d3.min()),
    }
    return HypothesisReport(checks=checks, fitted_nu=nu, details=details)


def mirror_residual(ws: SpectralWorkspace, psi: np.ndarray) -> float:
    return float(np.max(np.abs(psi + psi[::-1, :])))


def require_odd(ws: SpectralWorkspace, psi: np.ndarray, rtol: float = 1e-10) -> None:
    res = mirror_residual(ws, psi)
    scale = float(np.max(np.abs(psi)))
    if res > rtol * scale:
        raise SymmetryError(f"field is not odd in r (mirror residual {res:.3e}, scale {scale:.3e})")


def shifted_argument(ws: SpectralWorkspace, psi: np.ndarray, wave: WaveParams) -> np.ndarray:
    """Psi - c r - k on the right half plane (rows nr/2 .. nr-1)."""
    h = ws.grid.nr // 2
    return psi[h:] - wave.c * ws.r[h:] - wave.k


def theta_from_psi(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
                   check: bool = True) -> np.ndarray:
    """Odd extension of f(Psi - c r - k) from the right half plane."""
    psi = ws.check(psi)
    if check:
        require_odd(ws, psi)
    h = ws.grid.nr // 2
    right = p.f(shifted_argument(ws, psi, wave))
    theta = np.empty_like(psi)
    theta[h:] = right
    theta[:h] = -right[::-1]
    return theta
