"""Growth-curve fits used to compare simulated particle numbers with predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComparisonFailure

EXP_FLOOR = 10.0
MIN_WINDOW_POINTS = 8
REL_TOL = 0.10


@dataclass(frozen=True)
class Fit:
    """Least-squares fit: ``value`` is the coefficient (c of c t^2, or the log-slope)."""

    value: float
    intercept: float
    r2: float
    t_start: float
    t_end: float
    points: int


def _r2(y, yhat):
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0


def fit_quadratic(t, N, t_end=None) -> Fit:
    """Fit N = c t^2 (no offset) on 0 <= t <= t_end."""
    t = np.asarray(t, dtype=float)
    N = np.asarray(N, dtype=float)
    sel = t <= (t_end if t_end is not None else t[-1])
    t, N = t[sel], N[sel]
    x = t * t
    c = float(x @ N / (x @ x))
    return Fit(c, 0.0, _r2(N, c * x), float(t[0]), float(t[-1]), len(t))


def exponential_window(t, N, floor: float = EXP_FLOOR, t_end=None):
    """Boolean mask of the growth window: the tail of [0, t_end] where N stays >= floor.

    Returns None when the window holds fewer than ``MIN_WINDOW_POINTS`` samples.
    """
    t = np.asarray(t, dtype=float)
    N = np.asarray(N, dtype=float)
    inside = t <= (t_end if t_end is not None else t[-1])
    below = np.nonzero(inside & ~(N >= floor))[0]
    start = below[-1] + 1 if len(below) else 0
    mask = inside.copy()
    mask[:start] = False
    if mask.sum() < MIN_WINDOW_POINTS:
        return None
    return mask


def fit_exponential(t, N, floor: float = EXP_FLOOR, t_end=None) -> Fit | None:
    """Log-linear least squares over the growth window; ``value`` is d(log N)/dt."""
    mask = exponential_window(t, N, floor, t_end)
    if mask is None:
        return None
    t = np.asarray(t, dtype=float)[mask]
    y = np.log(np.asarray(N, dtype=float)[mask])
    slope, intercept = np.polyfit(t, y, 1)
    return Fit(float(slope), float(intercept), _r2(y, slope * t + intercept),
               float(t[0]), float(t[-1]), len(t))


@dataclass(frozen=True)
class Comparison:
    fitted_rate: float | None
    predicted_rate: float
    deviation: float | None
    consistent: bool
    detail: str

    def to_dict(self) -> dict:
        return dict(fitted_rate=self.fitted_rate, predicted_rate=self.predicted_rate,
                    deviation=self.deviation, consistent=self.consistent, detail=self.detail)


def compare_growth(t, N, msa_rate: float, growing: bool, t_end=None,
                   floor: float = EXP_FLOOR, tol: float = REL_TOL) -> Comparison:
    """Compare the fitted log-slope of N(t) with twice the predicted amplitude rate.

    Raises :class:`ComparisonFailure` when growth is predicted but no
    exponential window can be found. Without predicted growth the run is
    consistent when no window exists or N stays below ``floor``.
    """
    fit = fit_exponential(t, N, floor, t_end)
    target = 2.0 * msa_rate
    if growing:
        if fit is None:
            raise ComparisonFailure(f"growth at rate {target:.6g} predicted but N never "
                                    f"stays above {floor} for {MIN_WINDOW_POINTS} samples")
        dev = abs(fit.value - target) / target
        return Comparison(fit.value, target, dev, dev < tol,
                          f"window [{fit.t_start:.6g}, {fit.t_end:.6g}], R^2 = {fit.r2:.6f}")
    if fit is None:
        return Comparison(None, target, None, True, "no exponential window, none predicted")
    return Comparison(fit.value, target, None, False,
                      f"unexpected growth at log-slope {fit.value:.6g}")
