"""Constrained descent: gradient step, positive part, Steiner rearrangement, Nehari rescale."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SpectralWorkspace
from .nehari import NoNehariPoint, energy, euler_gradient, nehari_functional, nehari_scale
from .profile import Profile, WaveParams, theta_from_psi
from .symmetry import dagger, steiner_z

log = logging.getLogger(__name__)


class StallError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    max_iters: int = 5000
    step0: float = 1.0
    backtrack: float = 0.5
    grad_tol: float = 1e-5
    residual_tol: float = 1e-4
    steiner_every: int = 5
    armijo: float = 1e-4
    step_growth: float = 1.5
    step_max: float = 4.0

    def __post_init__(self):
        if self.max_iters < 1 or self.steiner_every < 1:
            raise ValueError("max_iters and steiner_every must be at least 1")
        if not (self.step0 > 0 and self.grad_tol > 0 and self.residual_tol > 0):
            raise ValueError("step0, grad_tol and residual_tol must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass
class SolveReport:
    psi: np.ndarray
    theta: np.ndarray
    energy_history: list[float] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    grad_history: list[float] = field(default_factory=list)
    t_scale_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wave: WaveParams | None = None
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def energy(self) -> float:
        return self.energy_history[-1] if self.energy_history else math.nan


def relative_residual(ws: SpectralWorkspace, psi: np.ndarray, theta: np.ndarray) -> float:
    nt = math.sqrt(ws.integrate(theta**2))
    if nt == 0:
        return math.inf
    return math.sqrt(ws.integrate((ws.half_laplacian(psi) - theta) ** 2)) / nt


def seed_field(ws: SpectralWorkspace, r0: float, A: float, sigma: float) -> np.ndarray:
    r, z = ws.r, ws.z
    return A * (np.exp(-((r - r0) ** 2 + z**2) / sigma**2) - np.exp(-((r + r0) ** 2 + z**2) / sigma**2))


def projected_gradient(psi: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Gradient with the components blocked by the constraint Psi >= 0 on {r > 0} removed.

    On cells where Psi sits at the bound and the descent direction -G points below it,
    the positive-part projection cancels any step, so those entries do not measure
    stationarity.
    """
    h = psi.shape[0] // 2
    right = np.where((psi[h:] <= 0.0) & (G[h:] > 0.0), 0.0, G[h:])
    return np.concatenate([-right[::-1], right], axis=0)


def _stationarity(ws, psi, G, xn2) -> tuple[float, float]:
    """(projected, raw) X-norm of the gradient relative to ||Psi||_X."""
    raw = math.sqrt(max(ws.x_norm2(G), 0.0) / xn2)
    proj = math.sqrt(max(ws.x_norm2(projected_gradient(psi, G)), 0.0) / xn2)
    return proj, raw


def _project(ws, psi, p, wave, steiner: bool, xnorm2=None):
    psi = dagger(psi)
    if steiner:
        psi = steiner_z(psi, check=False)
    t = nehari_scale(ws, psi, p, wave, xnorm2=xnorm2)
    return t * psi, t


def initialize(ws: SpectralWorkspace, p: Profile, wave: WaveParams, r0: float = 5.0,
               A: float | None = None, sigma: float = 2.0) -> np.ndarray:
    """Odd Gaussian dipole seed pushed onto the discrete Nehari set."""
    if A is None:
        A = 3.0 * (wave.c * r0 + wave.k)
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    if sigma <= 2.0 * max(ws.grid.hr, ws.grid.hz):
        raise ValueError("sigma must exceed two cell widths")
    if A <= wave.c * r0 + wave.k:
        raise NoNehariPoint(
            f"seed amplitude {A:g} does not exceed the cutoff c r0 + k = {wave.c * r0 + wave.k:g}")
    psi, _ = _project(ws, seed_field(ws, r0, A, sigma), p, wave, steiner=True)
    return psi


def _converged(ws, psi, p, wave, opts) -> bool:
    theta = theta_from_psi(ws, psi, p, wave, check=False)
    if relative_residual(ws, psi, theta) >= opts.residual_tol:
        return False
    G = euler_gradient(ws, psi, p, wave, check=False)
    return _stationarity(ws, psi, G, ws.x_norm2(psi))[0] < opts.grad_tol


def _line_search(ws, psi, G, gn2, E, p, wave, tau, opts, use_steiner):
    """Backtracking on the projected step; returns (psi, E, t, tau) or None."""
    for _ in range(60):
        trial, t = _project(ws, psi - tau * G, p, wave, use_steiner)
        Et, _ = energy(ws, trial, p, wave, check=False)
        if Et <= E - opts.armijo * tau * gn2:
            return trial, Et, t, tau
        tau *= opts.backtrack
    return None


def minimize(ws: SpectralWorkspace, psi0: np.ndarray, p: Profile, wave: WaveParams,
             opts: SolveOptions | None = None) -> SolveReport:
    opts = opts or SolveOptions()
    psi = ws.check(psi0).copy()
    E, _ = energy(ws, psi, p, wave)
    rep = SolveReport(psi=psi, theta=np.zeros_like(psi), wave=wave)
    rep.energy_history.append(E)
    rep.t_scale_history.append(1.0)
    tau = opts.step0
    it = 0
    while it < opts.max_iters:
        it += 1
        G = euler_gradient(ws, psi, p, wave, check=False)
        gn2 = ws.x_norm2(G)
        xn2 = ws.x_norm2(psi)
        theta = theta_from_psi(ws, psi, p, wave, check=False)
        res = relative_residual(ws, psi, theta)
        rep.grad_history.append(_stationarity(ws, psi, G, xn2)[0])
        rep.residual_history.append(res)
        if rep.grad_history[-1] < opts.grad_tol and res < opts.residual_tol:
            rep.converged = True
            break
        use_steiner = it % opts.steiner_every == 0
        step = _line_search(ws, psi, G, gn2, E, p, wave, tau, opts, use_steiner)
        if step is None and use_steiner:
            # the discrete rearrangement need not lower the energy; retry without it
            step = _line_search(ws, psi, G, gn2, E, p, wave, opts.step0, opts, False)
        if step is None:
            if rep.grad_history[-1] < 1e-12:
                log.info("line search exhausted at rounding level; stopping")
                break
            raise StallError(f"line search failed at iteration {it}")
        psi, E, t, tau = step
        rep.energy_history.append(E)
        rep.t_scale_history.append(t)
        tau = min(tau * opts.step_growth, opts.step_max)
        if it % 100 == 0:
            log.info("iter %d  E=%.12g  |G|/|Psi|=%.3e  residual=%.3e  step=%.3g",
                     it, E, rep.grad_history[-1], res, tau)
    # enforced rearrangement, kept only when it does not spoil convergence
    final, t = _project(ws, psi, p, wave, steiner=True)
    Ef, _ = energy(ws, final, p, wave, check=False)
    xn = math.sqrt(ws.x_norm2(psi))
    rep.diagnostics["steiner_defect"] = math.sqrt(max(ws.x_norm2(final - psi), 0.0)) / xn
    rep.diagnostics["steiner_energy_change"] = Ef - E
    if not rep.converged or _converged(ws, final, p, wave, opts):
        if Ef > E + 1e-12 * abs(E):
            log.warning("final rearrangement raised the energy by %.3e", Ef - E)
        psi, E = final, Ef
        rep.energy_history.append(E)
        rep.t_scale_history.append(t)
        rep.diagnostics["steiner_final"] = True
    else:
        log.info("final rearrangement skipped: it moves the critical point by %.3e",
                 rep.diagnostics["steiner_defect"])
        rep.diagnostics["steiner_final"] = False
    rep.iterations = it
    rep.psi = psi
    rep.theta = theta_from_psi(ws, psi, p, wave, check=False)
    rep.residual_history.append(relative_residual(ws, psi, rep.theta))
    G = euler_gradient(ws, psi, p, wave, check=False)
    proj, raw = _stationarity(ws, psi, G, ws.x_norm2(psi))
    rep.grad_history.append(proj)
    rep.diagnostics["grad_rel_unprojected"] = raw
    rep.converged = rep.grad_history[-1] < opts.grad_tol and rep.residual_history[-1] < opts.residual_tol
    rep.diagnostics["nehari_residual"] = nehari_functional(ws, psi, p, wave)
    return rep


@dataclass
class SeedSpec:
    """Gaussian seed parameters; ``ladder`` extra starts at r0/2, r0/4, ... are tried as well."""

    r0: float = 5.0
    A: float | None = None
    sigma: float = 2.0
    ladder: int = 0

    def starts(self, ws: SpectralWorkspace, wave: WaveParams) -> list[tuple[float, float, float]]:
        h = max(ws.grid.hr, ws.grid.hz)
        out = []
        for j in range(self.ladder + 1):
            r0 = self.r0 / 2**j
            sigma = self.sigma if j == 0 else min(self.sigma, max(0.7 * r0, 2.5 * h))
            A = self.A if (self.A is not None and j == 0) else 3.0 * (wave.c * r0 + wave.k)
            out.append((r0, A, sigma))
        return out


def solve(ws: SpectralWorkspace, p: Profile, wave: WaveParams, opts: SolveOptions | None = None,
          seed: SeedSpec | None = None) -> tuple[SolveReport, list[dict]]:
    """Run every start of the seed ladder and keep the lowest-energy converged result.

    Returns the chosen report and a summary of all candidates; distinct starts may land on
    distinct critical points and none of them is discarded from the summary.
    """
    seed = seed or SeedSpec()
    best, candidates = None, []
    for r0, A, sigma in seed.starts(ws, wave):
        entry = {"r0": r0, "A": A, "sigma": sigma}
        try:
            rep = minimize(ws, initialize(ws, p, wave, r0, A, sigma), p, wave, opts)
        except (NoNehariPoint, StallError, ValueError) as exc:
            entry.update(error=f"{type(exc).__name__}: {exc}", energy=None, converged=False, iterations=0)
            candidates.append(entry)
            continue
        entry.update(error=None, energy=rep.energy, converged=rep.converged, iterations=rep.iterations,
                     residual=rep.residual_history[-1])
        candidates.append(entry)
        key = (not rep.converged, rep.energy)
        if best is None or key < (not best.converged, best.energy):
            best = rep
    if best is None:
        raise NoNehariPoint("no seed of the ladder produced a Nehari point")
    chosen = next(i for i, c in enumerate(candidates) if c.get("energy") == best.energy)
    for i, c in enumerate(candidates):
        c["chosen"] = i == chosen
    best.diagnostics["candidates"] = candidates
    return best, candidates


def sweep(ws: SpectralWorkspace, p: Profile, c_list, k_list, opts: SolveOptions | None = None,
          seed: SeedSpec | None = None, warm_start: bool = True) -> list[SolveReport]:
    """Solve every (c, k) pair in lexicographic order.

    Each case is warm-started from the closest previously converged field, rescaled onto the
    new Nehari set; when no such field exists (or rescaling fails) the seed is used instead.
    Failures are recorded in ``SolveReport.error`` and the sweep continues.
    """
    pairs = sorted((float(c), float(k)) for c in c_list for k in k_list)
    done: list[tuple[tuple[float, float], np.ndarray]] = []
    reports = []
    for c, k in pairs:
        try:
            wave = WaveParams(c, k)
        except Exception as exc:
            reports.append(SolveReport(psi=np.zeros(ws.grid.shape), theta=np.zeros(ws.grid.shape),
                                       error=f"{type(exc).__name__}: {exc}"))
            continue
        rep = None
        try:
            if warm_start and done:
                (_, psi_prev) = min(done, key=lambda d: math.hypot(d[0][0] - c, d[0][1] - k))
                try:
                    psi0, _ = _project(ws, psi_prev, p, wave, steiner=True)
                except NoNehariPoint:
                    psi0 = None
                if psi0 is not None:
                    rep = minimize(ws, psi0, p, wave, opts)
                    rep.diagnostics["warm_start"] = True
            if rep is None:
                rep, _ = solve(ws, p, wave, opts, seed)
                rep.diagnostics["warm_start"] = False
        except (NoNehariPoint, StallError, ValueError) as exc:
            log.warning("sweep case c=%g k=%g failed: %s", c, k, exc)
            rep = SolveReport(psi=np.zeros(ws.grid.shape), theta=np.zeros(ws.grid.shape), wave=wave,
                              error=f"{type(exc).__name__}: {exc}")
        if rep.converged:
            done.append(((c, k), rep.psi))
        reports.append(rep)
    return reports
