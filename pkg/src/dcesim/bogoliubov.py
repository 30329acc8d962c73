"""Bogoliubov coefficients and particle numbers from the mode functions.

In a static region every mode function is a two-term signal

    eps_nm(t) = alpha_nm exp(-i k_n t) + beta_nm exp(+i k_n t)

so alpha and beta follow from eps and its derivative at a single instant
(projection), or from windowed time averages (the cross-check).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cavity import ModeTable
from .dynamics import ModeState, Trajectory
from .errors import ConfigError, PreStaticRegion, WindowTooShort

CONVENTIONS = ("plain", "weighted")
MIN_WINDOW_PERIODS = 10
KAISER_BETA = 20.0


@dataclass(frozen=True, eq=False)
class BogoliubovResult:
    alpha: np.ndarray
    beta: np.ndarray
    N: np.ndarray
    t_eval: float
    k: np.ndarray
    convention: str = "plain"

    def unitarity_deviation(self) -> float:
        """max_mj |sum_n k_n (alpha_nm alpha*_nj - beta_nm beta*_nj) - k_m delta_mj| / k_m."""
        k = self.k
        G = (self.alpha.T * k) @ self.alpha.conj() - (self.beta.T * k) @ self.beta.conj()
        return float(np.max(np.abs(G - np.diag(k)) / k[:, None]))

    def to_dict(self) -> dict:
        return {
            "t_eval": self.t_eval,
            "convention": self.convention,
            "k": self.k.tolist(),
            "N": self.N.tolist(),
            "alpha_re": self.alpha.real.tolist(),
            "alpha_im": self.alpha.imag.tolist(),
            "beta_re": self.beta.real.tolist(),
            "beta_im": self.beta.imag.tolist(),
        }


def particle_numbers(beta: np.ndarray, k: np.ndarray, convention: str = "plain") -> np.ndarray:
    """N_n = sum_m |beta_nm|^2 ("plain") or sum_m (k_n / k_m) |beta_nm|^2 ("weighted").

    ``beta`` may carry leading batch axes.
    """
    b2 = np.abs(beta) ** 2
    if convention == "plain":
        return b2.sum(axis=-1)
    if convention == "weighted":
        return k * (b2 / k).sum(axis=-1)
    raise ConfigError(f"unknown particle-number convention {convention!r}; use one of {CONVENTIONS}")


def _project(t, eps, deps, k):
    t = np.asarray(t, dtype=float)[..., None, None]
    kk = k[:, None]
    alpha = 0.5 * (eps + 1j * deps / kk) * np.exp(1j * kk * t)
    beta = 0.5 * (eps - 1j * deps / kk) * np.exp(-1j * kk * t)
    return alpha, beta


def project_bogoliubov(state: ModeState, table: ModeTable, t_F: float | None = None,
                       convention: str = "plain") -> BogoliubovResult:
    """Instantaneous projection onto the static in-basis at ``state.t``.

    Exact in the static region. With ``t_F`` given, states inside the drive
    window are rejected with :class:`PreStaticRegion`.
    """
    if t_F is not None and state.t < t_F:
        raise PreStaticRegion(f"projection at t = {state.t} lies before the drive end t_F = {t_F}")
    alpha, beta = _project(state.t, state.eps, state.deps, table.k)
    return BogoliubovResult(alpha=alpha, beta=beta, N=particle_numbers(beta, table.k, convention),
                            t_eval=state.t, k=table.k, convention=convention)


def average_bogoliubov(trajectory: Trajectory, table: ModeTable, window=None,
                       taper: str = "kaiser", convention: str = "plain") -> BogoliubovResult:
    """Bogoliubov coefficients as time averages over a static window.

    beta_nm is the mean of eps_nm(t) exp(-i k_n t) and alpha_nm the mean of
    eps_nm(t) exp(+i k_n t); the other term of the two-term signal averages
    out. ``taper="flat"`` is the plain trapezoid mean, whose leakage decays
    only like 1/(k_n T); the default Kaiser taper suppresses it to far below
    the integration error. The window defaults to [t_F, t_max].
    """
    t = trajectory.t
    t_F = trajectory.drive.t_F
    t0, t1 = window if window is not None else (t_F, trajectory.drive.t_max)
    if t0 < t_F - 1e-9 * max(1.0, t_F):
        raise PreStaticRegion(f"averaging window starts at {t0}, before t_F = {t_F}")
    k = table.k
    periods = (t1 - t0) * k[0] / (2 * math.pi)
    if periods < MIN_WINDOW_PERIODS:
        raise WindowTooShort(f"window [{t0}, {t1}] spans {periods:.3g} periods of the slowest mode, "
                             f"need {MIN_WINDOW_PERIODS}")
    sel = (t >= t0 - 1e-9) & (t <= t1 + 1e-9)
    ts = t[sel]
    if len(ts) > 1 and 2 * k[-1] * np.max(np.diff(ts)) >= math.pi:
        raise ConfigError("record spacing too coarse for averaging: the 2 k_N beat is aliased; "
                          "lower record_stride")
    if taper == "kaiser":
        w = np.kaiser(len(ts), KAISER_BETA)
    elif taper == "flat":
        w = np.ones(len(ts))
    else:
        raise ConfigError(f"unknown taper {taper!r}")
    q = np.zeros(len(ts))
    q[:-1] += 0.5 * np.diff(ts)
    q[1:] += 0.5 * np.diff(ts)
    w = w * q
    w = w / w.sum()
    eps = trajectory.eps[sel]
    phase = np.exp(-1j * np.outer(ts, k))[:, :, None]
    beta = np.einsum("r,rnm->nm", w, eps * phase)
    alpha = np.einsum("r,rnm->nm", w, eps * phase.conj())
    return BogoliubovResult(alpha=alpha, beta=beta, N=particle_numbers(beta, k, convention),
                            t_eval=float(ts[-1]), k=k, convention=convention)


def particle_number_history(trajectory: Trajectory, table: ModeTable,
                            convention: str = "plain"):
    """N_n(t) at every recorded time, each time read as a sudden switch-off.

    Returns ``(t, N)`` with ``N`` of shape (records, modes).
    """
    _, beta = _project(trajectory.t, trajectory.eps, trajectory.deps, table.k)
    return trajectory.t.copy(), particle_numbers(beta, table.k, convention)


def write_history_csv(t, N, path) -> Path:
    """Long-format CSV with columns t, n, N_n (n is 1-based)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "n", "N_n"])
        for r, tr in enumerate(t):
            ts = format(tr, ".17g")
            for n, val in enumerate(N[r], start=1):
                w.writerow([ts, n, format(val, ".17g")])
    return path


def read_history_csv(path):
    """Inverse of :func:`write_history_csv`."""
    rows = {}
    with Path(path).open() as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(float(rec["t"]), {})[int(rec["n"])] = float(rec["N_n"])
    t = np.array(sorted(rows))
    n_modes = max(max(v) for v in rows.values())
    N = np.array([[rows[tt].get(n, np.nan) for n in range(1, n_modes + 1)] for tt in t])
    return t, N


def write_summary_json(result: BogoliubovResult, path, extra: dict | None = None) -> Path:
    path = Path(path)
    payload = result.to_dict()
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2))
    return path
