"""Positive-part and rearrangement projections, mirror projections, and the level set."""

from __future__ import annotations

import numpy as np

from .grid import SpectralWorkspace
from .profile import WaveParams


class PreconditionError(ValueError):
    pass


def _odd_from_right(right: np.ndarray) -> np.ndarray:
    return np.concatenate([-right[::-1], right], axis=0)


def dagger(psi: np.ndarray) -> np.ndarray:
    """Positive part on {r > 0}, extended oddly to {r < 0}."""
    h = psi.shape[0] // 2
    return _odd_from_right(np.maximum(psi[h:], 0.0))


def steiner_slots(nz: int) -> np.ndarray:
    """Column indices ordered by increasing |z|, positive z first on ties."""
    h = nz // 2
    slots = np.empty(nz, dtype=np.intp)
    slots[0::2] = np.arange(h, nz)
    slots[1::2] = np.arange(h - 1, -1, -1)
    return slots


def steiner_z(psi: np.ndarray, check: bool = True) -> np.ndarray:
    """Symmetric-decreasing rearrangement of every right half-column in z.

    The input must already be its own dagger projection.
    """
    if check:
        d = dagger(psi)
        scale = float(np.max(np.abs(psi))) if psi.size else 0.0
        if np.max(np.abs(d - psi)) > 1e-12 * scale:
            raise PreconditionError("steiner_z expects a field equal to its dagger projection")
        psi = d
    h = psi.shape[0] // 2
    ordered = -np.sort(-psi[h:], axis=1)
    right = np.empty_like(ordered)
    right[:, steiner_slots(psi.shape[1])] = ordered
    return _odd_from_right(right)


def symmetry_project(psi: np.ndarray, which: str) -> np.ndarray:
    if which == "odd_r":
        return 0.5 * (psi - psi[::-1, :])
    if which == "even_z":
        return 0.5 * (psi + psi[:, ::-1])
    raise ValueError(f"unknown symmetry {which!r}")


def odd_residual(v: np.ndarray) -> float:
    return float(np.max(np.abs(v + v[::-1, :])))


def even_z_residual(v: np.ndarray) -> float:
    return float(np.max(np.abs(v - v[:, ::-1])))


def monotone_violations(v: np.ndarray, atol: float = 0.0) -> int:
    """Count increases of |v| away from z = 0 along each right half-column."""
    h, hz = v.shape[0] // 2, v.shape[1] // 2
    right = v[h:]
    up = right[:, hz:]            # z > 0, increasing |z|
    down = right[:, :hz][:, ::-1]  # z < 0, increasing |z|
    bad = np.count_nonzero(np.diff(up, axis=1) > atol)
    bad += np.count_nonzero(np.diff(down, axis=1) > atol)
    return int(bad)


def omega_mask(ws: SpectralWorkspace, psi: np.ndarray, wave: WaveParams) -> tuple[np.ndarray, float]:
    """Level set {r > 0, Psi > c r + k} and its area."""
    mask = ws.right & (psi > wave.c * ws.r + wave.k)
    return mask, float(np.count_nonzero(mask) * ws.grid.cell_area)
