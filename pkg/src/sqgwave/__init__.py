"""Travelling vortex-antivortex waves of the inviscid SQG equation.

The stream function is found as a minimizer of the energy on the Nehari set, then checked
against the qualitative properties expected of such waves and evolved in time.
"""

from .config import Config, ConfigError, load_config, parse_config
from .evolve import EvolveOptions, run_evolution, travel_diagnostics, velocity_from_theta
from .grid import GridSpec, SpectralWorkspace, make_grid
from .nehari import energy, euler_gradient, g_of_t, nehari_scale
from .profile import Profile, WaveParams, make_profile, theta_from_psi, validate_hypotheses
from .solver import SeedSpec, SolveOptions, SolveReport, initialize, minimize, solve, sweep
from .symmetry import dagger, steiner_z
from .verify import verify_all

__all__ = [
    "Config", "ConfigError", "load_config", "parse_config",
    "EvolveOptions", "run_evolution", "travel_diagnostics", "velocity_from_theta",
    "GridSpec", "SpectralWorkspace", "make_grid",
    "energy", "euler_gradient", "g_of_t", "nehari_scale",
    "Profile", "WaveParams", "make_profile", "theta_from_psi", "validate_hypotheses",
    "SeedSpec", "SolveOptions", "SolveReport", "initialize", "minimize", "solve", "sweep",
    "dagger", "steiner_z", "verify_all",
]
__version__ = "0.1.0"
