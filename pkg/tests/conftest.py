"""Shared fixtures: cavities and memoized driven runs reused across test modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pytest

from dcesim.bogoliubov import particle_number_history, project_bogoliubov
from dcesim.cavity import CavityConfig, coupling_coefficients, solve_spectrum
from dcesim.config import evaluate
from dcesim.dynamics import DriveConfig, IntegratorConfig, integrate

B0_ONE = CavityConfig(chi0=0.05, b0L=1.0, b0R=1.0)
B0_500 = CavityConfig(chi0=0.05, b0L=500.0, b0R=500.0)
FIG13_CAVITY = CavityConfig(chi0=0.05, b0L=5.0, b0R=1.0)
FIG14_CAVITY = CavityConfig.from_josephson(0.05, V0L=1.41, f0L=0.46, V0R=5.59, f0R=0.78)


@dataclass(frozen=True)
class Run:
    table: object
    coupling: object
    drive: object
    traj: object
    t: np.ndarray
    N: np.ndarray

    def at(self, time: float):
        """Bogoliubov projection at a recorded time."""
        return project_bogoliubov(self.traj[self.traj.index_of(time)], self.table)


@lru_cache(maxsize=None)
def spectrum(config: CavityConfig, n_modes: int = 10):
    return solve_spectrum(config, n_modes)


@lru_cache(maxsize=None)
def driven_run(config: CavityConfig, omega_L: str, omega_R: str, epsilon: float = 0.01,
               phi_R: float = 0.0, t_F: float = 100.0, t_max: float | None = None,
               n_modes: int = 10, dt_scale: float = 1.0, record_stride: int = 100,
               checkpoints: tuple = ()) -> Run:
    """Integrate a drive whose frequencies are expressions in the cavity's k_n ("2*k1", "k2-k1")."""
    table = spectrum(config, n_modes)
    drive = DriveConfig(epsilon=epsilon, omega_L=evaluate(omega_L, table.k),
                        omega_R=evaluate(omega_R, table.k), phi_R=phi_R, t_F=t_F,
                        t_max=t_max if t_max is not None else t_F + 1.0)
    coupling = coupling_coefficients(table, drive)
    base = IntegratorConfig(n_modes=n_modes).step(table)
    stride = max(1, round(record_stride / dt_scale))
    icfg = IntegratorConfig(n_modes=n_modes, dt=base * dt_scale, record_stride=stride)
    traj = integrate(table, coupling, drive, icfg, checkpoints=checkpoints)
    t, N = particle_number_history(traj, table)
    return Run(table, coupling, drive, traj, t, N)


@pytest.fixture(scope="session")
def b0_one():
    return spectrum(B0_ONE)


@pytest.fixture(scope="session")
def fig08_run():
    return driven_run(B0_ONE, "2*k1", "2*k1", t_F=100.0, t_max=100.0 + 20 * 2 * math.pi / 1.2611 + 1,
                      record_stride=10)


# acceptance criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
