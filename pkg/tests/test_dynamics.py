import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import B0_500, B0_ONE, driven_run, spectrum
from dcesim.analysis import fit_quadratic
from dcesim.cavity import coupling_coefficients
from dcesim.dynamics import (DriveConfig, IntegratorConfig, ModeState, coupling_at, initial_state,
                             instantaneous_frequency, integrate, max_wronskian_deviation, propagate,
                             wronskian_deviation, write_trajectory_csv)
from dcesim.errors import ConfigError, StepTooLarge


# ---- drive configuration ------------------------------------------------------

def test_drive_validation():
    with pytest.raises(ConfigError):
        DriveConfig(t_F=10, t_max=10)
    with pytest.raises(ConfigError):
        DriveConfig(epsilon=-0.1)
    with pytest.raises(ConfigError):
        DriveConfig(omega_L=0.0)
    with pytest.warns(UserWarning):
        DriveConfig(epsilon=0.3)
    d = DriveConfig(epsilon=0.01, epsilon_R=0.02)
    assert (d.eps_left, d.eps_right) == (0.01, 0.02)


# ---- instantaneous_frequency / coupling_at --------------------------------------

def test_frequency_outside_window(b0_one):
    drive = DriveConfig(epsilon=0.01, omega_L=2.0, omega_R=2.0, t_F=50, t_max=60)
    c = coupling_coefficients(b0_one, drive)
    k2 = b0_one.k[0] ** 2
    assert instantaneous_frequency(1, -1.0, c, drive) == k2
    assert instantaneous_frequency(1, 55.0, c, drive) == k2
    assert instantaneous_frequency(1, 0.0, c, drive) == k2


def test_frequency_without_drive(b0_one):
    drive = DriveConfig(epsilon=0.0, omega_L=2.0, omega_R=2.0)
    c = coupling_coefficients(b0_one, drive)
    t = np.linspace(0, 120, 97)
    assert np.all(instantaneous_frequency(3, t, c, drive) == b0_one.k[2] ** 2)


def test_frequency_at_sine_maximum(b0_one):
    drive = DriveConfig(epsilon=0.01, epsilon_R=0.0, omega_L=2.3, omega_R=1.0, phi_L=0.4)
    c = coupling_coefficients(b0_one, drive)
    t = (math.pi / 2 - drive.phi_L) / drive.omega_L
    assert instantaneous_frequency(2, t, c, drive) == pytest.approx(b0_one.k[1] ** 2 - c.alpha_L[1], rel=1e-14)


def test_coupling_at_properties(b0_one):
    drive = DriveConfig(epsilon=0.01, omega_L=2.0, omega_R=3.1, phi_R=0.7, t_F=50, t_max=60)
    c = coupling_coefficients(b0_one, drive)
    assert not np.any(coupling_at(55.0, c, drive))
    assert not np.any(coupling_at(-1.0, c, drive))
    rng = np.random.default_rng(3)
    for t in rng.uniform(0, 50, 10):
        s = coupling_at(t, c, drive)
        assert not np.any(np.diag(s))
        assert np.array_equal(s, s.T)
        ref = c.S_L * math.sin(2.0 * t) + c.S_R * math.sin(3.1 * t + 0.7)
        assert np.allclose(s, ref, rtol=1e-14, atol=0)


# ---- integrator ---------------------------------------------------------------

def test_step_bound(b0_one):
    bound = 2 * math.pi / (40 * b0_one.k[-1])
    assert IntegratorConfig(dt=bound).step(b0_one) == bound
    with pytest.raises(StepTooLarge):
        IntegratorConfig(dt=1.01 * bound).step(b0_one)
    assert IntegratorConfig().step(b0_one) == pytest.approx(2 * math.pi / (100 * b0_one.k[-1]))


def test_static_solution_is_reproduced(b0_one):
    # fourth-order scheme: the per-unit-time phase error at 100 steps per
    # period of the fastest mode is ~6e-7; four times finer it is ~2e-9
    drive = DriveConfig(epsilon=0.0, omega_L=2.0, omega_R=2.0, t_F=50, t_max=100)
    c = coupling_coefficients(b0_one, drive)
    dt = IntegratorConfig().step(b0_one) / 4
    traj = integrate(b0_one, c, drive, IntegratorConfig(dt=dt, record_stride=400))
    k = b0_one.k
    worst = 0.0
    for r in range(1, len(traj)):
        exact = np.diag(np.exp(-1j * k * traj.t[r]))
        worst = max(worst, np.max(np.abs(traj.eps[r] - exact)) / traj.t[r])
    assert worst < 1e-8


def test_static_solution_default_step_is_fourth_order(b0_one):
    drive = DriveConfig(epsilon=0.0, t_F=50, t_max=100)
    c = coupling_coefficients(b0_one, drive)
    errs = []
    for scale in (1.0, 0.5):
        dt = IntegratorConfig().step(b0_one) * scale
        traj = integrate(b0_one, c, drive, IntegratorConfig(dt=dt))
        errs.append(np.max(np.abs(traj.final.eps - np.diag(np.exp(-1j * b0_one.k * 100.0)))))
    assert errs[0] < 1e-4
    assert 12 < errs[0] / errs[1] < 20


def _reference_solution(table, coupling, drive, t_end):
    """Oracle: adaptive high-order integration of the same mode equations."""
    n = len(table)
    k2 = table.k ** 2
    PL, PR = coupling.full("L"), coupling.full("R")

    def rhs(t, y):
        X = y[: n * n].reshape(n, n)
        V = y[n * n:].reshape(n, n)
        K = np.diag(k2)
        if drive.active(t):
            K = K - PL * math.sin(drive.omega_L * t + drive.phi_L) - PR * math.sin(drive.omega_R * t + drive.phi_R)
        return np.concatenate([V.ravel(), (-K @ X).ravel()])

    s0 = initial_state(table)
    y0 = np.concatenate([s0.eps.ravel(), s0.deps.ravel()])
    sol = solve_ivp(rhs, (0, t_end), y0, method="DOP853", rtol=1e-12, atol=1e-13, t_eval=[t_end])
    return sol.y[: n * n, -1].reshape(n, n)


def test_driven_run_matches_adaptive_reference():
    table = spectrum(B0_ONE, 4)
    drive = DriveConfig(epsilon=0.05, omega_L=2 * table.k[0], omega_R=table.k[0] + table.k[1],
                        phi_R=0.3, t_F=30, t_max=31)
    c = coupling_coefficients(table, drive)
    # a quarter of the default step keeps the fourth-order error near 1e-8
    dt = IntegratorConfig(n_modes=4).step(table) / 4
    traj = integrate(table, c, drive, IntegratorConfig(n_modes=4, dt=dt))
    ref = _reference_solution(table, c, drive, 30.0)
    got = traj.eps[traj.index_of(30.0)]
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-7


def test_time_reversal_without_drive(b0_one):
    drive = DriveConfig(epsilon=0.0, t_F=1.0, t_max=80.0)
    c = coupling_coefficients(b0_one, drive)
    dt = IntegratorConfig().step(b0_one)
    s0 = initial_state(b0_one)
    mid, _, _ = propagate(s0, 60.0, c, drive, dt)
    back, _, _ = propagate(mid, 0.0, c, drive, -dt)
    assert np.max(np.abs(back.eps - s0.eps)) < 1e-8
    assert np.max(np.abs(back.deps - s0.deps)) / b0_one.k[-1] < 1e-8


def test_time_reversal_with_drive(b0_one):
    drive = DriveConfig(epsilon=0.01, omega_L=2 * b0_one.k[0], omega_R=2 * b0_one.k[0], t_F=40, t_max=50)
    c = coupling_coefficients(b0_one, drive)
    dt = IntegratorConfig().step(b0_one)
    s0 = initial_state(b0_one)
    mid, _, _ = propagate(s0, 50.0, c, drive, dt)
    back, _, _ = propagate(mid, 0.0, c, drive, dt)
    assert back.t == 0.0
    assert np.max(np.abs(back.eps - s0.eps)) < 1e-6


def test_records_include_cuts_and_checkpoints(b0_one):
    drive = DriveConfig(epsilon=0.01, omega_L=2.0, omega_R=2.0, t_F=10.0, t_max=12.5)
    c = coupling_coefficients(b0_one, drive)
    traj = integrate(b0_one, c, drive, checkpoints=(3.3,))
    for t in (0.0, 3.3, 10.0, 12.5):
        assert traj.t[traj.index_of(t)] == pytest.approx(t, abs=1e-12)
    assert np.all(np.diff(traj.t) > 0)
    with pytest.raises(KeyError):
        traj.index_of(7.123456)


def test_wronskian_conserved_on_resonant_run(fig08_run):
    assert max_wronskian_deviation(fig08_run.traj) < 1e-6


def test_wronskian_deviation_detects_broken_state(b0_one):
    s = initial_state(b0_one)
    assert wronskian_deviation(s, b0_one.k) < 1e-15
    broken = ModeState(0.0, s.eps * 1.01, s.deps)
    assert wronskian_deviation(broken, b0_one.k) > 5e-3


def test_translational_drive_creates_nothing(fig08_run):
    pi_run = driven_run(B0_ONE, "2*k1", "2*k1", phi_R=math.pi, t_F=100.0,
                        t_max=fig08_run.drive.t_max, record_stride=10)
    # both drives leave an O(epsilon^2) switch-on transient; once the
    # breathing run has grown past it the ratio stays below 1e-3
    late = (fig08_run.t >= 50.0) & (fig08_run.t <= 100.0)
    assert np.all(pi_run.N[late, 0] < 1e-3 * fig08_run.N[late, 0])
    # and the translational run never grows
    assert np.max(pi_run.N[:, 0]) < 1e-3 * fig08_run.N[fig08_run.traj.index_of(100.0), 0]


def test_equidistant_cavity_grows_quadratically():
    run = driven_run(B0_500, "2*k1", "2*k1", t_F=400.0)
    fit = fit_quadratic(run.t, run.N[:, 0], t_end=400.0)
    assert fit.r2 > 0.99
    assert run.N[run.traj.index_of(400.0), 0] > run.N[run.traj.index_of(200.0), 0] > 0


def test_trajectory_csv(tmp_path, b0_one):
    drive = DriveConfig(epsilon=0.01, omega_L=2.0, omega_R=2.0, t_F=1.0, t_max=2.0)
    traj = integrate(b0_one, coupling_coefficients(b0_one, drive), drive)
    path = write_trajectory_csv(traj, tmp_path / "traj.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + len(traj) * len(b0_one) ** 2


def test_deterministic(b0_one):
    drive = DriveConfig(epsilon=0.03, omega_L=2 * b0_one.k[0], omega_R=b0_one.k[1], t_F=20, t_max=25)
    c = coupling_coefficients(b0_one, drive)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = integrate(b0_one, c, drive)
        b = integrate(b0_one, c, drive)
    assert np.array_equal(a.eps, b.eps) and np.array_equal(a.deps, b.deps)
