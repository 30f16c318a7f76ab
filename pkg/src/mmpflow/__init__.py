"""Pseudo-spectral simulation and verification tools for the 3D
magneto-micropolar equations with horizontal dissipation on a periodic box."""
from .config import ConfigError, RunConfig, emit_config, parse_config
from .diagnostics import NormReport, NormSeries, energy_audit, fit_decay, norms
from .dynamics import BlowUpError, PhysParams, State, cfl_dt, step
from .experiments import ExitStatus, run_decay_study, run_simulation, run_stability_sweep
from .spectral import GridSpec, IllPosedNormError, ScalarField, VectorField, random_divfree_field

__all__ = [
    "BlowUpError",
    "ConfigError",
    "ExitStatus",
    "GridSpec",
    "IllPosedNormError",
    "NormReport",
    "NormSeries",
    "PhysParams",
    "RunConfig",
    "ScalarField",
    "State",
    "VectorField",
    "cfl_dt",
    "emit_config",
    "energy_audit",
    "fit_decay",
    "norms",
    "parse_config",
    "random_divfree_field",
    "run_decay_study",
    "run_simulation",
    "run_stability_sweep",
    "step",
]
