"""Dynamical Casimir effect in a cavity bounded by two driven SQUIDs.

Static spectrum (:mod:`cavity`), driven mode equations (:mod:`dynamics`),
Bogoliubov coefficients (:mod:`bogoliubov`), multiple-scale predictions
(:mod:`msa`) and parameter sweeps (:mod:`sweep`).
"""

__version__ = "0.1.0"

from .cavity import (CavityConfig, CouplingSet, ModeTable, coupling_coefficients, mode_normalization,
                     mode_phase, solve_spectrum, spectrum_residual, verify_static_boundary)
from .dynamics import (DriveConfig, IntegratorConfig, ModeState, Trajectory, coupling_at,
                       instantaneous_frequency, integrate, wronskian, wronskian_deviation)
from .bogoliubov import (BogoliubovResult, average_bogoliubov, particle_number_history,
                         project_bogoliubov)
from .msa import (MsaPrediction, ResonanceReport, classify_resonances, predict, single_mode_rate,
                  two_frequency_eigenvalues, two_mode_difference_behavior, two_mode_sum_rate)

__all__ = [
    "BogoliubovResult", "CavityConfig", "CouplingSet", "DriveConfig", "IntegratorConfig",
    "ModeState", "ModeTable", "MsaPrediction", "ResonanceReport", "Trajectory",
    "average_bogoliubov", "classify_resonances", "coupling_at", "coupling_coefficients",
    "instantaneous_frequency", "integrate", "mode_normalization", "mode_phase",
    "particle_number_history", "predict", "project_bogoliubov", "single_mode_rate",
    "solve_spectrum", "spectrum_residual", "two_frequency_eigenvalues",
    "two_mode_difference_behavior", "two_mode_sum_rate", "verify_static_boundary", "wronskian",
    "wronskian_deviation",
]
