"""Driven mode equations and their fixed-step Runge-Kutta-Merson integration.

The mode functions eps_nm(t) obey

    eps''_nm + omega_n^2(t) eps_nm = sum_{j != n} sigma_nj(t) eps_jm

with omega_n^2(t) = k_n^2 - sum_s alpha_n^s sin(Omega_s t + phi_s) and
sigma_nj(t) = sum_s S^s_nj sin(Omega_s t + phi_s), s in {L, R}, while the
drive is on (0 < t < t_F), and the static equations outside that window.
Initial data are eps(0) = 1 and eps'(0) = -i diag(k).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._merson import merson_segment
from .cavity import CouplingSet, ModeTable
from .errors import ConfigError, NonFiniteState, StepTooLarge

STEPS_PER_PERIOD = 100
MIN_STEPS_PER_PERIOD = 40


@dataclass(frozen=True)
class DriveConfig:
    """Harmonic flux drive on both SQUIDs, switched on abruptly at t = 0 and off at t_F.

    ``epsilon`` applies to both sides unless ``epsilon_L`` / ``epsilon_R`` override it.
    """

    epsilon: float = 0.01
    omega_L: float = 1.0
    omega_R: float = 1.0
    phi_L: float = 0.0
    phi_R: float = 0.0
    t_F: float = 100.0
    t_max: float = 120.0
    epsilon_L: float | None = None
    epsilon_R: float | None = None

    def __post_init__(self):
        if not 0 < self.t_F < self.t_max:
            raise ConfigError(f"need 0 < t_F < t_max, got t_F={self.t_F}, t_max={self.t_max}")
        for name in ("epsilon", "epsilon_L", "epsilon_R"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ConfigError(f"{name} must be >= 0, got {v}")
        if not (self.omega_L > 0 and self.omega_R > 0):
            raise ConfigError(f"drive frequencies must be > 0, got {self.omega_L}, {self.omega_R}")
        if max(self.eps_left, self.eps_right) > 0.2:
            warnings.warn(f"drive amplitude {max(self.eps_left, self.eps_right)} > 0.2: "
                          "the linearized boundary model assumes epsilon << 1", stacklevel=3)

    @property
    def eps_left(self) -> float:
        return self.epsilon if self.epsilon_L is None else self.epsilon_L

    @property
    def eps_right(self) -> float:
        return self.epsilon if self.epsilon_R is None else self.epsilon_R

    def active(self, t) -> bool:
        return 0.0 < t < self.t_F


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed step ``dt`` (None: 100 steps per period of the fastest mode)."""

    n_modes: int = 10
    dt: float | None = None
    record_stride: int = 100

    def __post_init__(self):
        if self.n_modes < 2:
            raise ConfigError(f"n_modes must be >= 2, got {self.n_modes}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.record_stride < 1:
            raise ConfigError(f"record_stride must be >= 1, got {self.record_stride}")

    def step(self, table: ModeTable) -> float:
        kmax = float(table.k[-1])
        if self.dt is None:
            return 2 * math.pi / (STEPS_PER_PERIOD * kmax)
        bound = 2 * math.pi / (MIN_STEPS_PER_PERIOD * kmax)
        if self.dt > bound * (1 + 1e-12):
            raise StepTooLarge(f"dt = {self.dt} exceeds 2*pi/(40 k_N) = {bound:.6g}")
        return self.dt


@dataclass(frozen=True, eq=False)
class ModeState:
    t: float
    eps: np.ndarray
    deps: np.ndarray


def initial_state(table: ModeTable) -> ModeState:
    n = len(table)
    return ModeState(0.0, np.eye(n, dtype=complex), np.diag(-1j * table.k))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded mode states; ``eps[r]`` and ``deps[r]`` are the matrices at ``t[r]``."""

    t: np.ndarray
    eps: np.ndarray
    deps: np.ndarray
    table: ModeTable
    drive: DriveConfig
    dt: float
    error_estimate: float

    def __len__(self):
        return len(self.t)

    def __getitem__(self, r) -> ModeState:
        return ModeState(float(self.t[r]), self.eps[r], self.deps[r])

    @property
    def final(self) -> ModeState:
        return self[-1]

    def index_of(self, t: float) -> int:
        r = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[r] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no record at t = {t}")
        return r


def instantaneous_frequency(n: int, t, coupling: CouplingSet, drive: DriveConfig):
    """omega_n^2(t) for mode number n (1-based)."""
    i = n - 1
    k2 = coupling.k[i] ** 2
    t = np.asarray(t, dtype=float)
    on = (t > 0) & (t < drive.t_F)
    mod = (coupling.alpha_L[i] * np.sin(drive.omega_L * t + drive.phi_L)
           + coupling.alpha_R[i] * np.sin(drive.omega_R * t + drive.phi_R))
    return np.where(on, k2 - mod, k2)


def coupling_at(t: float, coupling: CouplingSet, drive: DriveConfig) -> np.ndarray:
    """Intermode coupling matrix sigma(t); zero diagonal, zero outside the drive window."""
    if not drive.active(t):
        return np.zeros_like(coupling.S_L)
    return (coupling.S_L * math.sin(drive.omega_L * t + drive.phi_L)
            + coupling.S_R * math.sin(drive.omega_R * t + drive.phi_R))


def _to_real(state: ModeState):
    X = np.ascontiguousarray(np.hstack([state.eps.real, state.eps.imag]))
    V = np.ascontiguousarray(np.hstack([state.deps.real, state.deps.imag]))
    return X, V


def _to_complex(A, n):
    return A[..., :n] + 1j * A[..., n:]


def _segments(t0, t1, t_F, extra=()):
    """Split [t0, t1] at the switching times (and ``extra`` cuts), tagging whether the drive is on."""
    inner = (c for c in (0.0, t_F, *extra) if min(t0, t1) < c < max(t0, t1))
    cuts = sorted({t0, t1, *inner}, reverse=bool(t1 < t0))
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        out.append((a, b, 0.0 < mid < t_F))
    return out


def propagate(state: ModeState, t_end: float, coupling: CouplingSet, drive: DriveConfig,
              dt: float, record_stride: int | None = None, checkpoints=()):
    """Integrate ``state`` to ``t_end`` (forward or backward) with steps of at most |dt|.

    The interval is cut at the drive switching times and at ``checkpoints``.
    Each piece gets a whole number of equal steps, rounded up to a multiple
    of the record stride so records fall on the cuts. Returns the final
    state, the list of recorded (t, X, V) triples and the largest embedded
    error estimate.
    """
    n = len(coupling.k)
    X, V = _to_real(state)
    ksq = np.ascontiguousarray(coupling.k ** 2)
    PL = np.ascontiguousarray(coupling.full("L"))
    PR = np.ascontiguousarray(coupling.full("R"))
    stride = record_stride or 0
    records = []
    err = 0.0
    for a, b, on in _segments(state.t, t_end, drive.t_F, checkpoints):
        nsteps = math.ceil(abs(b - a) / abs(dt) - 1e-9)
        s = stride if stride else nsteps
        nsteps = max(s, s * math.ceil(nsteps / s))
        h = (b - a) / nsteps
        nrec = nsteps // s if stride else 0
        rec_t = np.empty(nrec)
        rec_X = np.empty((nrec, n, 2 * n))
        rec_V = np.empty((nrec, n, 2 * n))
        got, e, finite = merson_segment(X, V, float(a), float(h), nsteps, s, on, ksq, PL, PR,
                                        float(drive.omega_L), float(drive.omega_R),
                                        float(drive.phi_L), float(drive.phi_R),
                                        rec_t, rec_X, rec_V)
        err = max(err, e)
        if not finite:
            raise NonFiniteState(f"non-finite mode state in segment [{a}, {b}]")
        if got:
            rec_t[got - 1] = b
        records.extend(zip(rec_t[:got], rec_X[:got], rec_V[:got]))
    final = ModeState(float(t_end), _to_complex(X, n), _to_complex(V, n))
    return final, records, err


def integrate(table: ModeTable, coupling: CouplingSet, drive: DriveConfig,
              icfg: IntegratorConfig | None = None, checkpoints=()) -> Trajectory:
    """Integrate from t = 0 to drive.t_max, recording every ``record_stride`` steps.

    Records always include t = 0, t_F, t_max and every time in ``checkpoints``.
    """
    icfg = icfg or IntegratorConfig(n_modes=len(table))
    dt = icfg.step(table)
    start = initial_state(table)
    final, records, err = propagate(start, drive.t_max, coupling, drive, dt, icfg.record_stride,
                                    checkpoints)
    n = len(table)
    t = np.array([0.0] + [r[0] for r in records])
    X = np.array([_to_real(start)[0]] + [r[1] for r in records])
    V = np.array([_to_real(start)[1]] + [r[2] for r in records])
    return Trajectory(t=t, eps=_to_complex(X, n), deps=_to_complex(V, n), table=table,
                      drive=drive, dt=dt, error_estimate=err)


def wronskian(state: ModeState) -> np.ndarray:
    """W_mj = sum_n (eps'_nm conj(eps_nj) - eps_nm conj(eps'_nj))."""
    return state.deps.T @ state.eps.conj() - state.eps.T @ state.deps.conj()


def wronskian_deviation(state: ModeState, k) -> float:
    """max_mj |W_mj + 2 i k_m delta_mj| / (2 k_m); exactly zero for the continuous flow."""
    k = np.asarray(k)
    W = wronskian(state)
    return float(np.max(np.abs(W + 2j * np.diag(k)) / (2 * k[:, None])))


def max_wronskian_deviation(traj: Trajectory) -> float:
    return max(wronskian_deviation(traj[r], traj.table.k) for r in range(len(traj)))


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    """Dump every recorded eps_nm and eps'_nm (1-based n, m)."""
    path = Path(path)
    n = len(traj.table)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "n", "m", "re_eps", "im_eps", "re_deps", "im_deps"])
        for r in range(len(traj)):
            e, de = traj.eps[r], traj.deps[r]
            t = format(traj.t[r], ".17g")
            for i in range(n):
                for j in range(n):
                    w.writerow([t, i + 1, j + 1, format(e[i, j].real, ".17g"),
                                format(e[i, j].imag, ".17g"), format(de[i, j].real, ".17g"),
                                format(de[i, j].imag, ".17g")])
    return path
