"""Pseudo-spectral SQG integrator and travelling-frame diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SpectralWorkspace


class BlowUpError(RuntimeError):
    pass


class PeakAtWindowEdge(RuntimeError):
    pass


@dataclass
class EvolveOptions:
    T: float = 1.0
    cfl: float = 0.5
    dealias: bool = True
    snapshot_every: float = 0.1

    def __post_init__(self):
        if not self.T > 0 or not self.snapshot_every > 0:
            raise ValueError("T and snapshot_every must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    steps: int = 0


@dataclass
class TrajectoryDiagnostics:
    times: np.ndarray
    shape_error: np.ndarray
    shift: np.ndarray
    fitted_speed: float
    l2_drift: float = math.nan
    l4_drift: float = math.nan

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "shape_error": self.shape_error.tolist(),
            "shift": self.shift.tolist(),
            "fitted_speed": self.fitted_speed,
            "max_shape_error": float(self.shape_error.max()),
            "l2_drift_per_time": self.l2_drift,
            "l4_drift_per_time": self.l4_drift,
        }


def dealias_mask(ws: SpectralWorkspace) -> np.ndarray:
    g = ws.grid
    mr = np.abs(np.fft.fftfreq(g.nr, d=1.0 / g.nr))
    mz = np.fft.rfftfreq(g.nz, d=1.0 / g.nz)
    return (mr[:, None] < g.nr / 3.0) & (mz[None, :] < g.nz / 3.0)


def velocity_from_theta(ws: SpectralWorkspace, theta: np.ndarray) -> np.ndarray:
    """u = perp-gradient of (-Delta)^(-1/2) theta, stacked as (2, nr, nz)."""
    return ws.spectral_gradients(ws.riesz_inverse(theta))[1]


class _Stepper:
    def __init__(self, ws: SpectralWorkspace, dealias: bool):
        self.ws = ws
        self.mask = (dealias_mask(ws) if dealias else np.ones(ws.xi_abs.shape, dtype=bool)).astype(float)

    def rhs(self, th_hat: np.ndarray) -> tuple[np.ndarray, float]:
        ws = self.ws
        psi_hat = ws.xi_inv * th_hat
        ur = ws.ifft(-ws.d_z * psi_hat)
        uz = ws.ifft(ws.d_r * psi_hat)
        tr = ws.ifft(ws.d_r * th_hat)
        tz = ws.ifft(ws.d_z * th_hat)
        adv = ws.fft(ur * tr + uz * tz)
        umax = float(np.sqrt(np.max(ur * ur + uz * uz)))
        return -self.mask * adv, umax

    def rk4(self, th_hat, dt, k1=None):
        if k1 is None:
            k1, _ = self.rhs(th_hat)
        k2, _ = self.rhs(th_hat + 0.5 * dt * k1)
        k3, _ = self.rhs(th_hat + 0.5 * dt * k2)
        k4, _ = self.rhs(th_hat + dt * k3)
        return th_hat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_evolution(ws: SpectralWorkspace, theta0: np.ndarray, opts: EvolveOptions,
                  growth_limit: float = 10.0) -> tuple[np.ndarray, Trajectory]:
    """Integrate d_t theta + u . grad theta = 0 with classical RK4 and CFL-limited steps.

    The first snapshot is the (dealiased) initial state.
    """
    stepper = _Stepper(ws, opts.dealias)
    th_hat = stepper.mask * ws.fft(ws.check(theta0))
    h = min(ws.grid.hr, ws.grid.hz)
    traj = Trajectory()
    state = ws.ifft(th_hat)
    peak0 = float(np.max(np.abs(state)))
    traj.times.append(0.0)
    traj.snapshots.append(state)
    t = 0.0
    n_snap = max(1, int(round(opts.T / opts.snapshot_every)))
    targets = [opts.T * (i + 1) / n_snap for i in range(n_snap)]
    for target in targets:
        while t < target - 1e-14 * opts.T:
            k1, umax = stepper.rhs(th_hat)
            dt = opts.cfl * h / umax if umax > 0 else target - t
            dt = min(dt, target - t)
            th_hat = stepper.rk4(th_hat, dt, k1)
            t += dt
            traj.steps += 1
            peak = float(np.max(np.abs(ws.ifft(th_hat))))
            if not math.isfinite(peak) or peak > growth_limit * peak0:
                raise BlowUpError(f"max|theta| grew from {peak0:.3e} to {peak:.3e} by t={t:.4g}")
        t = target
        traj.times.append(t)
        traj.snapshots.append(ws.ifft(th_hat))
    return traj.snapshots[-1], traj


def _z_spectra(v: np.ndarray) -> np.ndarray:
    return np.fft.rfft(v, axis=1)


def _corr_derivs(w, wt, kz, s):
    """First and second s-derivatives of the interpolated correlation sum w exp(i kz s)."""
    ph = w * np.exp(1j * kz * s)
    d1 = np.sum(wt * np.real(1j * kz * ph))
    d2 = np.sum(wt * np.real(-(kz**2) * ph))
    return d1, d2


def best_shift(ws: SpectralWorkspace, snap: np.ndarray, ref: np.ndarray) -> float:
    """z-shift s maximising the correlation of snap(z) with ref(z - s)."""
    g = ws.grid
    A, B = _z_spectra(snap), _z_spectra(ref)
    corr = np.fft.irfft(np.sum(A * np.conj(B), axis=0), n=g.nz)
    j = int(np.argmax(corr))
    if j == g.nz // 2:
        raise PeakAtWindowEdge("correlation peak sits at the edge of the search window")
    cm, c0, cp = corr[j - 1], corr[j], corr[(j + 1) % g.nz]
    denom = cm - 2.0 * c0 + cp
    frac = 0.5 * (cm - cp) / denom if denom != 0 else 0.0
    s = (j + frac) * g.hz
    # Newton polish on the trigonometric interpolant of the correlation
    kz = np.fft.rfftfreq(g.nz, d=1.0 / g.nz) * (math.pi / g.Lz)
    w = np.sum(A * np.conj(B), axis=0)
    wt = np.full(kz.shape, 2.0)
    wt[0] = 1.0
    wt[-1] = 1.0  # Nyquist, nz even
    for _ in range(20):
        d1, d2 = _corr_derivs(w, wt, kz, s)
        if d2 >= 0:
            break
        ds = -d1 / d2
        if abs(ds) > g.hz:
            break
        s += ds
        if abs(ds) < 1e-14 * g.Lz:
            break
    period = 2.0 * g.Lz
    return (s + 0.5 * period) % period - 0.5 * period


def shift_z(ws: SpectralWorkspace, v: np.ndarray, s: float) -> np.ndarray:
    """Return v(z - s) by spectral interpolation."""
    g = ws.grid
    kz = np.fft.rfftfreq(g.nz, d=1.0 / g.nz) * (math.pi / g.Lz)
    vh = np.fft.rfft(v, axis=1) * np.exp(-1j * kz * s)[None, :]
    if g.nz % 2 == 0:
        vh[:, -1] = vh[:, -1].real * np.cos(kz[-1] * s)
    return np.fft.irfft(vh, n=g.nz, axis=1)


def lp_norm(ws: SpectralWorkspace, v: np.ndarray, q: int) -> float:
    return ws.integrate(np.abs(v) ** q) ** (1.0 / q)


def travel_diagnostics(ws: SpectralWorkspace, times, snapshots, theta_ref: np.ndarray,
                       c: float) -> TrajectoryDiagnostics:
    times = np.asarray(times, dtype=float)
    shifts, errs = [], []
    nref = math.sqrt(ws.integrate(theta_ref**2))
    for snap in snapshots:
        s = best_shift(ws, snap, theta_ref)
        back = shift_z(ws, snap, -s)
        shifts.append(s)
        errs.append(math.sqrt(ws.integrate((back - theta_ref) ** 2)) / nref)
    shifts = np.unwrap(np.array(shifts), period=2.0 * ws.grid.Lz)
    speed = float(np.polyfit(times, shifts, 1)[0]) if times.size > 1 else 0.0
    T = times[-1] if times.size and times[-1] > 0 else 1.0
    l2 = [lp_norm(ws, v, 2) for v in snapshots]
    l4 = [lp_norm(ws, v, 4) for v in snapshots]
    return TrajectoryDiagnostics(
        times=times,
        shape_error=np.array(errs),
        shift=shifts,
        fitted_speed=speed,
        l2_drift=float(np.max(np.abs(np.array(l2) - l2[0])) / l2[0] / T),
        l4_drift=float(np.max(np.abs(np.array(l4) - l4[0])) / l4[0] / T),
    )
