"""Static cavity: spectrum of the two-SQUID resonator and mode coefficients.

Units throughout: cavity length d = 1 and propagation speed v = 1, so the
eigenfrequencies ``k`` are the dimensionless products k_n d and time is
measured in units of d.

A static mode is ``cos(k x + phi)``. The boundary conditions at x = 0 and
x = 1 reduce to the pair

    -k tan(phi)       + chi0 k^2 = b0L
     k tan(k + phi)   + chi0 k^2 = b0R

The left line is solved explicitly for ``phi`` (principal branch of atan),
and the right line is rearranged into the pole-free form

    F(k) = k sin(k + phi) - (b0R - chi0 k^2) cos(k + phi)

whose sign changes bracket the eigenfrequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import TYPE_CHECKING, Iterator

import numpy as np

from .errors import ConfigError, ConvergenceFailure, InsufficientRoots

if TYPE_CHECKING:
    from .dynamics import DriveConfig

SCAN_STEP = math.pi / 200
ROOT_TOL = 1e-6
MAX_ITER = 100


@dataclass(frozen=True)
class CavityConfig:
    """Static cavity parameters.

    ``b0 = V0 cos(f0)`` on each side. Supply ``b0`` and ``f0`` and the
    Josephson scale ``V0`` is derived; supply all three and they are checked
    for consistency. Use :meth:`from_josephson` to start from ``V0``.
    """

    chi0: float = 0.05
    b0L: float = 1.0
    b0R: float = 1.0
    f0L: float = 0.45 * math.pi
    f0R: float = 0.45 * math.pi
    V0L: float | None = None
    V0R: float | None = None

    def __post_init__(self):
        if not self.chi0 >= 0:
            raise ConfigError(f"chi0 must be >= 0, got {self.chi0}")
        for side in "LR":
            b0 = getattr(self, "b0" + side)
            f0 = getattr(self, "f0" + side)
            V0 = getattr(self, "V0" + side)
            c = math.cos(f0)
            if V0 is None:
                if abs(c) < 1e-15:
                    raise ConfigError(f"cos(f0{side}) = 0: V0{side} cannot be derived from b0{side}")
                object.__setattr__(self, "V0" + side, b0 / c)
            elif abs(b0 - V0 * c) > 1e-12 * max(1.0, abs(b0)):
                raise ConfigError(
                    f"inconsistent {side} boundary: b0{side}={b0!r} but V0{side}*cos(f0{side})={V0 * c!r}"
                )

    @classmethod
    def from_josephson(cls, chi0, V0L, f0L, V0R, f0R):
        return cls(chi0=chi0, b0L=V0L * math.cos(f0L), b0R=V0R * math.cos(f0R),
                   f0L=f0L, f0R=f0R, V0L=V0L, V0R=V0R)

    def swapped(self) -> CavityConfig:
        """Mirror image of the cavity (left and right SQUIDs exchanged)."""
        return replace(self, b0L=self.b0R, b0R=self.b0L, f0L=self.f0R, f0R=self.f0L,
                       V0L=self.V0R, V0R=self.V0L)


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Solved static modes, ordered by increasing eigenfrequency.

    Arrays are indexed from 0; mode number n (as in k_1, N_1) is index n - 1.
    """

    k: np.ndarray
    phi: np.ndarray
    M: np.ndarray
    config: CavityConfig

    def __len__(self):
        return len(self.k)

    @property
    def modes(self) -> Iterator[tuple[float, float, float]]:
        return zip(self.k.tolist(), self.phi.tolist(), self.M.tolist())

    def gaps(self) -> np.ndarray:
        return np.diff(self.k)

    def truncated(self, n_modes: int) -> ModeTable:
        return ModeTable(self.k[:n_modes], self.phi[:n_modes], self.M[:n_modes], self.config)


@dataclass(frozen=True, eq=False)
class CouplingSet:
    """Parametric amplitudes (diagonal) and intermode couplings of the driven cavity.

    ``S_L`` and ``S_R`` carry zeros on the diagonal; the diagonal couplings
    are ``alpha_L`` and ``alpha_R``. All entries are linear in the drive
    amplitude. ``k`` is kept alongside for the rate formulas.
    """

    alpha_L: np.ndarray
    alpha_R: np.ndarray
    S_L: np.ndarray
    S_R: np.ndarray
    k: np.ndarray = field(repr=False)

    def full(self, side: str) -> np.ndarray:
        """Symmetric coupling matrix of one SQUID including its diagonal."""
        if side == "L":
            return self.S_L + np.diag(self.alpha_L)
        if side == "R":
            return self.S_R + np.diag(self.alpha_R)
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")


def mode_phase(k, config: CavityConfig):
    """Phase of the static mode from the left boundary condition, in (-pi/2, pi/2)."""
    k = np.asarray(k, dtype=float)
    return np.arctan((config.chi0 * k * k - config.b0L) / k)


def _phase_derivative(k, config):
    u = config.chi0 * k - config.b0L / k
    return (config.chi0 + config.b0L / (k * k)) / (1.0 + u * u)


def spectrum_residual(k, config: CavityConfig):
    """Pole-free right-boundary residual F(k); its zeros are the eigenfrequencies."""
    k = np.asarray(k, dtype=float)
    theta = k + mode_phase(k, config)
    return k * np.sin(theta) - (config.b0R - config.chi0 * k * k) * np.cos(theta)


def _residual_and_slope(k, config):
    phi = math.atan((config.chi0 * k * k - config.b0L) / k)
    theta = k + phi
    s, c = math.sin(theta), math.cos(theta)
    g = config.b0R - config.chi0 * k * k
    dtheta = 1.0 + _phase_derivative(k, config)
    F = k * s - g * c
    dF = s + k * c * dtheta + 2.0 * config.chi0 * k * c + g * s * dtheta
    return F, dF


def boundary_residuals(k, phi, config: CavityConfig):
    """Raw residuals of the left and right boundary conditions (tan form)."""
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    left = -k * np.tan(phi) + config.chi0 * k * k - config.b0L
    right = k * np.tan(k + phi) + config.chi0 * k * k - config.b0R
    return left, right


def _refine(a, b, fa, config):
    """Safeguarded Newton iteration on a sign-change bracket [a, b]."""
    x = 0.5 * (a + b)
    for _ in range(MAX_ITER):
        F, dF = _residual_and_slope(x, config)
        if F == 0.0:
            return x
        if (F < 0) == (fa < 0):
            a, fa = x, F
        else:
            b = x
        step = F / dF if dF != 0.0 else math.inf
        x_new = x - step
        if not a < x_new < b:
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= 4 * np.finfo(float).eps * x or b - a <= 4 * np.finfo(float).eps * x:
            return x_new
        x = x_new
    raise ConvergenceFailure(f"no convergence in [{a}, {b}] after {MAX_ITER} iterations")


def find_roots(config: CavityConfig, n_modes: int, step: float = SCAN_STEP,
               ceiling: float | None = None) -> np.ndarray:
    """First ``n_modes`` eigenfrequencies, scanning a uniform grid for sign changes."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if ceiling is None:
        ceiling = 4 * math.pi * n_modes
    grid = np.arange(1, int(ceiling / step) + 1) * step
    F = spectrum_residual(grid, config)
    roots = []
    for i in range(len(grid) - 1):
        if len(roots) == n_modes:
            break
        fa, fb = F[i], F[i + 1]
        if fa == 0.0:
            cand = grid[i]
        elif fa * fb < 0:
            cand = _refine(grid[i], grid[i + 1], fa, config)
        else:
            continue
        phi = math.atan((config.chi0 * cand * cand - config.b0L) / cand)
        if abs(math.cos(cand + phi)) < 1e-12:
            # F vanishes through the cos factor alone; the tan form is undefined here
            continue
        if roots and cand - roots[-1] < 0.5 * step:
            continue
        roots.append(cand)
    if len(roots) < n_modes:
        raise InsufficientRoots(
            f"found {len(roots)} roots below k = {ceiling:.6g}, {n_modes} requested"
        )
    return np.array(roots)


def mode_normalization(k, phi, config: CavityConfig):
    """Norm of the static mode including the right-boundary capacitive term."""
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return (1.0 + np.sin(2 * (k + phi)) / (2 * k) - np.sin(2 * phi) / (2 * k)
            + 2 * config.chi0 * np.cos(k + phi) ** 2)


def solve_spectrum(config: CavityConfig, n_modes: int, step: float = SCAN_STEP) -> ModeTable:
    k = find_roots(config, n_modes, step=step)
    phi = mode_phase(k, config)
    left, right = boundary_residuals(k, phi, config)
    F = spectrum_residual(k, config)
    bad = np.abs(F) >= ROOT_TOL
    if bad.any():
        raise ConvergenceFailure(f"residual above {ROOT_TOL} at k = {k[bad]}")
    return ModeTable(k=k, phi=phi, M=mode_normalization(k, phi, config), config=config)


@lru_cache(maxsize=256)
def cached_spectrum(config: CavityConfig, n_modes: int) -> ModeTable:
    """Memoized :func:`solve_spectrum`; configs are frozen and hashable."""
    return solve_spectrum(config, n_modes)


def coupling_coefficients(table: ModeTable, drive: DriveConfig) -> CouplingSet:
    """Parametric amplitudes and intermode couplings after the rescaling q -> q/sqrt(M).

    The static flux offsets stand in for f(0): sin f^{L,R}(0) = sin f0^{L,R}.
    """
    cfg = table.config
    cL = np.cos(table.phi) / np.sqrt(table.M)
    cR = np.cos(table.k + table.phi) / np.sqrt(table.M)
    gL = 2 * cfg.V0L * drive.eps_left * math.sin(cfg.f0L)
    gR = 2 * cfg.V0R * drive.eps_right * math.sin(cfg.f0R)
    PL = gL * np.outer(cL, cL)
    PR = gR * np.outer(cR, cR)
    alpha_L = np.diag(PL).copy()
    alpha_R = np.diag(PR).copy()
    np.fill_diagonal(PL, 0.0)
    np.fill_diagonal(PR, 0.0)
    return CouplingSet(alpha_L=alpha_L, alpha_R=alpha_R, S_L=PL, S_R=PR, k=table.k.copy())


def verify_static_boundary(table: ModeTable, config: CavityConfig | None = None) -> np.ndarray:
    """Boundary-condition residuals of each static mode, shape (n_modes, 2).

    The mode ``cos(k x + phi) exp(-i k t)`` is substituted into the boundary
    equations at x = 0 and x = 1 in their multiplied-out form

        x = 0:  (chi0 k^2 - b0L) cos(phi)       - k sin(phi)       = 0
        x = 1:  (chi0 k^2 - b0R) cos(k + phi)   + k sin(k + phi)   = 0

    which stays finite in the Dirichlet-like limit.
    """
    cfg = config if config is not None else table.config
    k, phi = table.k, table.phi
    left = (cfg.chi0 * k**2 - cfg.b0L) * np.cos(phi) - k * np.sin(phi)
    right = (cfg.chi0 * k**2 - cfg.b0R) * np.cos(k + phi) + k * np.sin(k + phi)
    return np.abs(np.column_stack([left, right]))
