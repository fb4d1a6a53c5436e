"""Traveling waves for the slow-erosion conservation law with nonlocal flux.

Submodules: model (erosion function triple), profile (smooth stationary
profile and implicit curves), waves (classification and construction),
tracking (characteristic front-tracking solver), transforms (coordinate
changes), stability (envelopes and convergence experiments), cli.
"""

__version__ = "0.1.0"

from .model import ErosionModel, ModelError, make_model
from .profile import ProfileConstants, constants, d_hk, d_ss, phi, psi, z_adm, z_stat
from .tracking import MarkerField, RunResult, SolverConfig, SolverError, init_state, run
from .waves import PhysicalWave, StationaryWave, WaveType, classify, construct

__all__ = [
    "ErosionModel",
    "ModelError",
    "make_model",
    "ProfileConstants",
    "constants",
    "d_hk",
    "d_ss",
    "phi",
    "psi",
    "z_adm",
    "z_stat",
    "MarkerField",
    "RunResult",
    "SolverConfig",
    "SolverError",
    "init_state",
    "run",
    "PhysicalWave",
    "StationaryWave",
    "WaveType",
    "classify",
    "construct",
    "__version__",
]
