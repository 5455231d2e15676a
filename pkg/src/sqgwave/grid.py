"""Periodic cell-centred grids and the fractional spectral operators.

Fields are plain ``numpy`` arrays of shape ``(nr, nz)``: axis 0 is the
horizontal coordinate ``r`` and axis 1 the vertical coordinate ``z``.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


class GridError(ValueError):
    pass


class OddResolution(GridError):
    pass


class GridMismatch(GridError):
    pass


class SupportMarginWarning(UserWarning):
    """Source support reaches the zero-padding margin of the box."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SQGW_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    nr: int
    nz: int
    Lr: float
    Lz: float

    @property
    def hr(self) -> float:
        return 2.0 * self.Lr / self.nr

    @property
    def hz(self) -> float:
        return 2.0 * self.Lz / self.nz

    @property
    def cell_area(self) -> float:
        return self.hr * self.hz

    @property
    def area(self) -> float:
        return 4.0 * self.Lr * self.Lz

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.nz)

    def r_nodes(self) -> np.ndarray:
        return -self.Lr + (np.arange(self.nr) + 0.5) * self.hr

    def z_nodes(self) -> np.ndarray:
        return -self.Lz + (np.arange(self.nz) + 0.5) * self.hz

    def validate(self) -> None:
        for name in ("nr", "nz"):
            n = getattr(self, name)
            if int(n) != n or n <= 0:
                raise GridError(f"{name} must be a positive integer, got {n!r}")
            if n % 2:
                raise OddResolution(f"{name}={n} is odd; mirror pairing needs an even count")
            if n < 8:
                raise GridError(f"{name}={n} is below the minimum of 8")
        for name in ("Lr", "Lz"):
            L = getattr(self, name)
            if not (math.isfinite(L) and L > 0):
                raise GridError(f"{name} must be a positive finite extent, got {L!r}")


@dataclass(eq=False)
class SpectralWorkspace:
    """Grid geometry plus the wavenumber tables used by every operator.

    Not safe for concurrent use by several callers.
    """

    grid: GridSpec
    r: np.ndarray = field(init=False, repr=False)
    z: np.ndarray = field(init=False, repr=False)
    xi_r: np.ndarray = field(init=False, repr=False)
    xi_z: np.ndarray = field(init=False, repr=False)
    xi_abs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        g = self.grid
        g.validate()
        r1, z1 = g.r_nodes(), g.z_nodes()
        self.r, self.z = np.meshgrid(r1, z1, indexing="ij")
        self.r1, self.z1 = r1, z1
        # rfft2 layout: full axis 0, half axis 1
        kr = np.fft.fftfreq(g.nr, d=1.0 / g.nr) * (math.pi / g.Lr)
        kz = np.fft.rfftfreq(g.nz, d=1.0 / g.nz) * (math.pi / g.Lz)
        self.xi_r = kr[:, None] * np.ones((1, kz.size))
        self.xi_z = np.ones((kr.size, 1)) * kz[None, :]
        self.xi_abs = np.hypot(self.xi_r, self.xi_z)
        inv = np.zeros_like(self.xi_abs)
        nz_mask = self.xi_abs > 0
        inv[nz_mask] = 1.0 / self.xi_abs[nz_mask]
        self.xi_inv = inv
        # derivative multipliers with the Nyquist rows/columns removed
        dr = 1j * self.xi_r
        dz = 1j * self.xi_z
        dr[g.nr // 2, :] = 0.0
        dz[:, g.nz // 2] = 0.0
        self.d_r, self.d_z = dr, dz
        self.right = self.r > 0

    # transforms ---------------------------------------------------------
    def fft(self, v: np.ndarray) -> np.ndarray:
        return sfft.rfft2(v, workers=_workers())

    def ifft(self, vh: np.ndarray) -> np.ndarray:
        return sfft.irfft2(vh, s=self.grid.shape, workers=_workers())

    def integrate(self, v: np.ndarray) -> float:
        return float(np.sum(v) * self.grid.cell_area)

    def check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        return v

    # operators ----------------------------------------------------------
    def half_laplacian(self, psi: np.ndarray) -> np.ndarray:
        """(-Delta)^(1/2) through the multiplier |xi|."""
        return self.ifft(self.xi_abs * self.fft(self.check(psi)))

    def laplacian_neg(self, psi: np.ndarray) -> np.ndarray:
        return self.ifft(self.xi_abs**2 * self.fft(self.check(psi)))

    def riesz_inverse(self, theta: np.ndarray) -> np.ndarray:
        """(-Delta)^(-1/2) with the zero mode sent to 0."""
        theta = self.check(theta)
        th = self.fft(theta)
        scale = np.abs(theta).sum()
        if scale > 0 and abs(th[0, 0].real) > 1e-12 * scale:
            warnings.warn("riesz_inverse input has a nonzero mean; zero mode dropped", RuntimeWarning, stacklevel=2)
        return self.ifft(self.xi_inv * th)

    def x_inner(self, psi1: np.ndarray, psi2: np.ndarray) -> float:
        """Quadrature of psi1 * (-Delta)^(1/2) psi2 over the box."""
        psi1 = self.check(psi1)
        return self.integrate(psi1 * self.half_laplacian(psi2))

    def x_norm2(self, psi: np.ndarray) -> float:
        return self.x_inner(psi, psi)

    def spectral_gradients(self, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``grad`` and ``perp_grad`` stacked as (2, nr, nz) arrays.

        ``perp_grad = (-d_z psi, d_r psi)``.
        """
        ph = self.fft(self.check(psi))
        pr = self.ifft(self.d_r * ph)
        pz = self.ifft(self.d_z * ph)
        return np.stack([pr, pz]), np.stack([-pz, pr])

    def divergence(self, vec: np.ndarray) -> np.ndarray:
        return self.ifft(self.d_r * self.fft(vec[0]) + self.d_z * self.fft(vec[1]))

    # free-space convolution -------------------------------------------------
    def _free_space_kernel_hat(self) -> np.ndarray:
        kh = getattr(self, "_fs_kernel_hat", None)
        if kh is None:
            g = self.grid
            ir = np.fft.fftfreq(2 * g.nr, d=1.0 / (2 * g.nr))
            iz = np.fft.fftfreq(2 * g.nz, d=1.0 / (2 * g.nz))
            dr = ir[:, None] * g.hr
            dz = iz[None, :] * g.hz
            dist = np.hypot(dr, dz)
            dist[0, 0] = 1.0
            kern = g.cell_area / (2.0 * math.pi * dist)
            kern[0, 0] = self_cell_integral(g.hr, g.hz) / (2.0 * math.pi)
            kh = sfft.rfft2(kern, workers=_workers())
            self._fs_kernel_hat = kh
        return kh

    def free_space_potential(self, theta: np.ndarray, margin: float = 0.1) -> np.ndarray:
        """Whole-plane potential (1/2pi) * int theta(y)/|x-y| dy.

        Zero-pads to twice the box in each direction so the periodic images
        never overlap the box.
        """
        theta = self.check(theta)
        g = self.grid
        if support_touches_margin(theta, margin):
            warnings.warn("source support enters the outer margin of the box", SupportMarginWarning, stacklevel=2)
        padded = np.zeros((2 * g.nr, 2 * g.nz))
        padded[: g.nr, : g.nz] = theta
        out = sfft.irfft2(sfft.rfft2(padded, workers=_workers()) * self._free_space_kernel_hat(),
                          s=padded.shape, workers=_workers())
        return out[: g.nr, : g.nz]


def self_cell_integral(hr: float, hz: float) -> float:
    """Exact value of int 1/|x| over the cell [-hr/2, hr/2] x [-hz/2, hz/2]."""
    a, b = 0.5 * hr, 0.5 * hz
    return 4.0 * (a * math.asinh(b / a) + b * math.asinh(a / b))


def support_touches_margin(v: np.ndarray, margin: float) -> bool:
    nr, nz = v.shape
    mr = max(1, int(round(margin * nr)))
    mz = max(1, int(round(margin * nz)))
    peak = np.max(np.abs(v))
    if peak == 0:
        return False
    sup = np.abs(v) > 1e-12 * peak
    inner = np.zeros_like(sup)
    inner[mr:nr - mr, mz:nz - mz] = True
    return bool(np.any(sup & ~inner))


def make_grid(spec: GridSpec) -> SpectralWorkspace:
    return SpectralWorkspace(spec)
