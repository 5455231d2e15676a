"""PNG figures for reports (non-interactive Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import GridSpec  # noqa: E402

_META = {"Software": None}


def plot_field(values: np.ndarray, grid: GridSpec, path, title: str = "", symmetric: bool = True) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    m = float(np.max(np.abs(values))) or 1.0
    kw = {"vmin": -m, "vmax": m, "cmap": "RdBu_r"} if symmetric else {"cmap": "viridis"}
    im = ax.imshow(values.T, origin="lower", extent=(-grid.Lr, grid.Lr, -grid.Lz, grid.Lz),
                   interpolation="nearest", **kw)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("r")
    ax.set_ylabel("z")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_history(energy, residual, grad, path) -> None:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    a1.plot(np.arange(len(energy)), energy)
    a1.set_xlabel("accepted step")
    a1.set_ylabel("E")
    a2.semilogy(np.arange(len(residual)), residual, label="PDE residual")
    a2.semilogy(np.arange(len(grad)), grad, label="|G|/|Psi|")
    a2.set_xlabel("iteration")
    a2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_travel(times, shift, shape_error, c: float, path) -> None:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    a1.plot(times, shift, "o-", label="measured shift")
    a1.plot(times, c * np.asarray(times), "--", label="c t")
    a1.set_xlabel("t")
    a1.set_ylabel("z shift")
    a1.legend()
    a2.semilogy(times, np.maximum(shape_error, 1e-300), "o-")
    a2.set_xlabel("t")
    a2.set_ylabel("shape error")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
