"""Post-hoc checks of a computed wave: equation residual, whole-plane representation,
far-field decay, support geometry, symmetry and the inequality suite."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .grid import SpectralWorkspace, SupportMarginWarning, support_touches_margin
from .nehari import NEHARI_TOL, NoNehariPoint, energy, nehari_functional, nehari_scale
from .profile import Profile, WaveParams, theta_from_psi
from .symmetry import (dagger, even_z_residual, monotone_violations, odd_residual, omega_mask,
                       steiner_z)

NOT_APPLICABLE = "NotApplicable"


class TrivialTheta(ValueError):
    """The scalar field vanishes identically; the residual is undefined."""


class SupportError(ValueError):
    pass


class DecayWindowError(ValueError):
    pass


def _l2(ws, v):
    return math.sqrt(ws.integrate(v * v))


def pde_residual(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams) -> float:
    theta = theta_from_psi(ws, psi, p, wave)
    nt = _l2(ws, theta)
    if nt == 0:
        raise TrivialTheta("theta vanishes identically")
    return _l2(ws, ws.half_laplacian(psi) - theta) / nt


def inner_box(ws: SpectralWorkspace) -> np.ndarray:
    g = ws.grid
    return (np.abs(ws.r) < 0.5 * g.Lr) & (np.abs(ws.z) < 0.5 * g.Lz)


def representation_check(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams) -> float:
    """Relative L2 gap between psi and the free-space potential of theta on the inner half-box."""
    theta = theta_from_psi(ws, psi, p, wave)
    if not np.any(theta):
        raise TrivialTheta("theta vanishes identically")
    if support_touches_margin(theta, 1.0 / min(theta.shape)):
        raise SupportError("support of theta reaches the boundary cells")
    with warnings.catch_warnings():
        warnings.simplefilter("always", SupportMarginWarning)
        tilde = ws.free_space_potential(theta)
    m = inner_box(ws)
    return float(np.linalg.norm((psi - tilde)[m]) / np.linalg.norm(psi[m]))


def support_radius(ws: SpectralWorkspace, theta: np.ndarray) -> float:
    sup = np.abs(theta) > 1e-12 * np.max(np.abs(theta))
    return float(np.max(np.hypot(ws.r[sup], ws.z[sup]))) if np.any(sup) else 0.0


def annular_max(ws: SpectralWorkspace, psi: np.ndarray, R_in: float, R_out: float):
    h = min(ws.grid.hr, ws.grid.hz)
    rad = np.hypot(ws.r, ws.z).ravel()
    vals = np.abs(psi).ravel()
    order = np.argsort(rad)
    rad, vals = rad[order], vals[order]
    Rs, Ms = [], []
    R = R_in
    while R + h <= R_out + 1e-12:
        lo, hi = np.searchsorted(rad, [R, R + h])
        if hi > lo:
            Rs.append(R)
            Ms.append(vals[lo:hi].max())
        R += h
    return np.array(Rs), np.array(Ms)


def decay_fit(ws: SpectralWorkspace, psi: np.ndarray, support_rad: float,
              outer_fraction: float = 0.7) -> float:
    """Least-squares slope of log max_{annulus}|psi| against log R."""
    R_in = 1.5 * support_rad
    R_out = outer_fraction * min(ws.grid.Lr, ws.grid.Lz)
    if R_in >= R_out:
        raise DecayWindowError(f"decay window [{R_in:.3g}, {R_out:.3g}] is empty")
    Rs, Ms = annular_max(ws, psi, R_in, R_out)
    good = Ms > 0
    if np.count_nonzero(good) < 3:
        raise DecayWindowError("fewer than three usable annuli in the decay window")
    return float(np.polyfit(np.log(Rs[good]), np.log(Ms[good]), 1)[0])


@dataclass
class SupportReport:
    area: float
    axis_gap: float
    components: int
    bbox: tuple[float, float, float, float] | None  # r_min, r_max, z_min, z_max on r > 0


def support_report(ws: SpectralWorkspace, theta: np.ndarray) -> SupportReport:
    peak = float(np.max(np.abs(theta)))
    if peak == 0:
        return SupportReport(0.0, math.inf, 0, None)
    sup = np.abs(theta) > 1e-12 * peak
    right = sup & ws.right
    area = float(np.count_nonzero(sup)) * ws.grid.cell_area
    if not np.any(right):
        return SupportReport(area, math.inf, 0, None)
    _, ncomp = ndimage.label(right)  # default structure is 4-connected
    rr, zz = ws.r[right], ws.z[right]
    return SupportReport(area, float(rr.min()), int(ncomp),
                         (float(rr.min()), float(rr.max()), float(zz.min()), float(zz.max())))


def tail_integrals(ws: SpectralWorkspace, psi: np.ndarray, wave: WaveParams, radii):
    """Tails of T(psi) = (psi - c r - k)^+ on {|z| >= R} and {|r| >= R}."""
    T = np.where(ws.right, np.maximum(psi - wave.c * ws.r - wave.k, 0.0), 0.0)
    T2 = T * T
    zt = [ws.integrate(T2[:, np.abs(ws.z1) >= R]) for R in radii]
    rt = [ws.integrate(T2[np.abs(ws.r1) >= R]) for R in radii]
    return np.array(zt), np.array(rt)


def _on_nehari(ws, psi, p, wave) -> bool:
    if not np.any(dagger(psi)):
        return False
    return abs(nehari_functional(ws, psi, p, wave)) <= NEHARI_TOL * ws.x_norm2(psi)


def _rescaled_energy(ws, psi, p, wave):
    t = nehari_scale(ws, psi, p, wave)
    return energy(ws, t * psi, p, wave, check=False)[0]


def inequality_suite(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
                     rtol: float = 1e-8, n_radii: int = 5) -> dict:
    """Evaluate every checkable inequality; Nehari-conditional ones may be NotApplicable."""
    flags: dict[str, object] = {}
    X = ws.x_norm2(psi)
    E, _ = energy(ws, psi, p, wave)
    on_n = _on_nehari(ws, psi, p, wave)
    h = ws.grid.nr // 2

    _, area = omega_mask(ws, psi, wave)
    flags["setborne"] = bool(area * wave.k**4 <= ws.integrate(psi[h:] ** 4))

    if on_n:
        flags["bound"] = bool(X <= 6.0 * E + 1e-10 * X)
        ts = np.logspace(-1, 1, 50)
        Es = [energy(ws, t * psi, p, wave, check=False)[0] for t in ts]
        i = int(np.argmax(Es))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
        flags["col"] = bool(lo <= 1.0 <= hi)
        try:
            flags["dagger_lemma"] = bool(_rescaled_energy(ws, dagger(psi), p, wave) <= E + rtol * abs(E))
            d = dagger(psi)
            flags["steiner_lemma"] = bool(_rescaled_energy(ws, steiner_z(d, check=False), p, wave)
                                          <= E + rtol * abs(E))
        except NoNehariPoint:
            flags["dagger_lemma"] = flags["steiner_lemma"] = False
        if p.kind == "quadratic":
            w = psi[h:] - wave.c * ws.r[h:] - wave.k
            ident = X / 6.0 + (2.0 / 3.0) * ws.integrate((wave.c * ws.r[h:] + wave.k) * p.f(w))
            flags["quadratic_identity"] = bool(abs(E - ident) <= 1e-10 * abs(E))
    else:
        for key in ("bound", "col", "dagger_lemma", "steiner_lemma"):
            flags[key] = NOT_APPLICABLE
        if p.kind == "quadratic":
            flags["quadratic_identity"] = NOT_APPLICABLE

    # tail envelopes: O(1/R) in z (shape only), explicit (cR + k)^-2 bound in r
    g = ws.grid
    radii = np.linspace(1.0, 0.9 * min(g.Lr, g.Lz), n_radii)
    zt, rt = tail_integrals(ws, psi, wave, radii)
    L4 = ws.integrate(psi**4)
    flags["huy_envelope"] = bool(np.all(zt * radii <= zt[0] * radii[0] * (1 + rtol) + 1e-300))
    flags["redoute"] = bool(np.all(rt <= L4 / (wave.c * radii + wave.k) ** 2 * (1 + rtol)))
    return flags


@dataclass
class VerifyTolerances:
    residual: float = 1e-4
    representation: float = 5e-2
    decay_lo: float = -1.35
    decay_hi: float = -0.7


@dataclass
class VerifyReport:
    residual_rel: float
    representation_rel: float
    decay_slope: float
    support_area: float
    support_axis_gap: float
    support_components: int
    support_bbox: list | None
    symmetry_odd_r: float
    symmetry_even_z: float
    monotone_violations: int
    min_theta_right: float
    energy: float
    theta_l2: float
    inequality_flags: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def verify_all(ws: SpectralWorkspace, psi: np.ndarray, p: Profile, wave: WaveParams,
               tol: VerifyTolerances | None = None) -> VerifyReport:
    tol = tol or VerifyTolerances()
    theta = theta_from_psi(ws, psi, p, wave)
    if not np.any(theta):
        raise TrivialTheta("theta vanishes identically")
    res = pde_residual(ws, psi, p, wave)
    try:
        rep_rel = representation_check(ws, psi, p, wave)
    except SupportError:
        rep_rel = math.inf
    sup = support_report(ws, theta)
    try:
        slope = decay_fit(ws, psi, support_radius(ws, theta))
    except DecayWindowError:
        slope = math.nan
    peak = float(np.max(np.abs(theta)))
    E, _ = energy(ws, psi, p, wave)
    g = ws.grid
    flags = inequality_suite(ws, psi, p, wave)
    inner = sup.bbox is not None and (sup.bbox[1] < 0.7 * g.Lr and max(-sup.bbox[2], sup.bbox[3]) < 0.7 * g.Lz)
    out = VerifyReport(
        residual_rel=res,
        representation_rel=rep_rel,
        decay_slope=slope,
        support_area=sup.area,
        support_axis_gap=sup.axis_gap,
        support_components=sup.components,
        support_bbox=list(sup.bbox) if sup.bbox else None,
        symmetry_odd_r=odd_residual(theta),
        symmetry_even_z=even_z_residual(theta),
        monotone_violations=monotone_violations(theta, 1e-12 * peak),
        min_theta_right=float(theta[ws.right].min()),
        energy=E,
        theta_l2=_l2(ws, theta),
        inequality_flags=flags,
    )
    out.checks = {
        "residual": res < tol.residual,
        "representation": rep_rel < tol.representation,
        "decay": tol.decay_lo <= slope <= tol.decay_hi,
        "odd_r": out.symmetry_odd_r == 0.0,
        "nonnegative": out.min_theta_right >= -1e-12 * peak,
        "monotone": out.monotone_violations == 0,
        "axis_gap": sup.axis_gap >= g.hr,
        "support_inside": bool(inner),
        "nontrivial": out.theta_l2 > 0 and E > 0,
        "inequalities": all(v is True or v == NOT_APPLICABLE for v in flags.values()),
    }
    return out
