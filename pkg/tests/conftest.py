import numpy as np
import pytest

from sqgwave.grid import GridSpec, make_grid
from sqgwave.profile import WaveParams, make_profile


def random_odd_field(ws, rng, n_bumps=3, amp=(0.5, 3.0), width=(0.15, 0.4)):
    """Smooth field, odd in r: a few Gaussians on r > 0 minus their mirror images."""
    g = ws.grid
    out = np.zeros(g.shape)
    for _ in range(n_bumps):
        r0 = rng.uniform(0.1, 0.5) * g.Lr
        z0 = rng.uniform(-0.4, 0.4) * g.Lz
        s = rng.uniform(*width) * min(g.Lr, g.Lz)
        a = rng.uniform(*amp)
        out += a * (np.exp(-((ws.r - r0) ** 2 + (ws.z - z0) ** 2) / s**2)
                    - np.exp(-((ws.r + r0) ** 2 + (ws.z - z0) ** 2) / s**2))
    return out


@pytest.fixture(scope="session")
def ws32():
    return make_grid(GridSpec(32, 32, 2.0, 2.0))


@pytest.fixture(scope="session")
def ws64():
    return make_grid(GridSpec(64, 64, 2.5, 2.5))


@pytest.fixture(scope="session")
def bump():
    return make_profile()


@pytest.fixture(scope="session")
def quad():
    return make_profile("quadratic")


@pytest.fixture(scope="session")
def wave():
    return WaveParams(1.0, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
