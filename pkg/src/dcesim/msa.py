"""Multiple-scale analysis: resonance classification and slow-amplitude growth rates.

With q_n = (A_n e^{-i k_n t} + B_n e^{i k_n t}) / sqrt(2 k_n) the slow
amplitudes obey a linear system whose coefficients are Kronecker deltas in
the drive frequencies. The general matrix is assembled by
:func:`slow_amplitude_matrix`; the closed forms for the standard cases are
provided separately and cross-checked against it.

Slow amplitudes grow like exp(rate t), so particle numbers grow like
exp(2 rate t).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cavity import CouplingSet, ModeTable
from .dynamics import DriveConfig
from .errors import CaseUnmatched

DIAGONAL, SUM, DIFFERENCE = "diagonal", "sum", "difference"
REGIMES = ("single-mode", "two-mode-sum", "two-mode-difference", "two-frequency", "general", "none")
CASE_DIAGONAL_DIFFERENCE = "2kn,km-kn"
CASE_SUM_DIFFERENCE = "kn+km,km-kn"
CLOSED_FORM_TOL = 1e-10
GROWTH_TOL = 1e-8


def default_tolerance(table: ModeTable) -> float:
    return 1e-9 * float(table.k[0])


@dataclass(frozen=True)
class Condition:
    """One matched resonance: ``modes`` are 1-based and ordered by frequency."""

    kind: str
    side: str
    modes: tuple

    def to_dict(self):
        return {"type": self.kind, "side": self.side, "modes": list(self.modes)}


@dataclass(frozen=True)
class ResonanceReport:
    conditions: tuple
    tolerance: float

    def on_side(self, side: str) -> list:
        return [c for c in self.conditions if c.side == side]

    def __bool__(self):
        return bool(self.conditions)

    def to_dict(self):
        return {"tolerance": self.tolerance, "matched_conditions": [c.to_dict() for c in self.conditions]}


def _match_side(k, omega, side, tol):
    out = []
    n_modes = len(k)
    for n in range(n_modes):
        if abs(omega - 2 * k[n]) <= tol:
            out.append(Condition(DIAGONAL, side, (n + 1,)))
    for n in range(n_modes):
        for m in range(n + 1, n_modes):
            if abs(omega - (k[n] + k[m])) <= tol:
                out.append(Condition(SUM, side, (n + 1, m + 1)))
            if abs(omega - (k[m] - k[n])) <= tol:
                out.append(Condition(DIFFERENCE, side, (n + 1, m + 1)))
    return out


def classify_resonances(table: ModeTable, drive: DriveConfig, tol: float | None = None) -> ResonanceReport:
    """All matches of Omega_L and Omega_R against 2 k_n, k_n + k_m and |k_n - k_m|."""
    tol = default_tolerance(table) if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be > 0")
    conds = _match_side(table.k, drive.omega_L, "L", tol) + _match_side(table.k, drive.omega_R, "R", tol)
    return ResonanceReport(tuple(conds), tol)


def single_mode_rate(coupling: CouplingSet, n: int, phi_R: float) -> float:
    """Gamma_n for Omega_L = Omega_R = 2 k_n with phi_L = 0 (n is 1-based)."""
    i = n - 1
    aL, aR = coupling.alpha_L[i], coupling.alpha_R[i]
    radicand = aR * aR + aL * aL + 2 * aR * aL * math.cos(phi_R)
    return math.sqrt(max(radicand, 0.0)) / (4 * coupling.k[i])


def _gamma(coupling, n, m, phi_R):
    i, j = n - 1, m - 1
    return coupling.S_L[i, j] + coupling.S_R[i, j] * cmath.exp(-1j * phi_R)


def two_mode_sum_rate(coupling: CouplingSet, n: int, m: int, phi_R: float) -> float:
    """Rate of both modes for Omega_L = Omega_R = k_n + k_m, n != m, phi_L = 0."""
    if n == m:
        raise ValueError("two-mode rate needs distinct modes")
    k = coupling.k
    return abs(_gamma(coupling, n, m, phi_R)) / (4 * math.sqrt(k[n - 1] * k[m - 1]))


@dataclass(frozen=True)
class OscillatoryPrediction:
    rate: float
    beat_frequency: float
    oscillatory: bool = True


def two_mode_difference_behavior(coupling: CouplingSet, n: int, m: int, phi_R: float) -> OscillatoryPrediction:
    """Omega_L = Omega_R = |k_m - k_n|: no growth, slow amplitudes beat at the returned frequency."""
    if n == m:
        raise ValueError("difference resonance needs distinct modes")
    k = coupling.k
    beat = abs(_gamma(coupling, n, m, phi_R)) / (4 * math.sqrt(k[n - 1] * k[m - 1]))
    return OscillatoryPrediction(rate=0.0, beat_frequency=beat)


def slow_amplitude_matrix(coupling: CouplingSet, drive: DriveConfig, modes=None,
                          tol: float | None = None) -> np.ndarray:
    """Matrix of d/dt [A_1..A_K, B_1..B_K] for the listed 1-based ``modes`` (default: all).

    Row n carries the factor 1/(4 k_n). The exact intermode factor is
    1/(4 sqrt(k_n k_m)); the two differ by a diagonal similarity, so the
    eigenvalues are the same.
    """
    k = coupling.k
    modes = list(range(1, len(k) + 1)) if modes is None else list(modes)
    tol = 1e-9 * float(k[0]) if tol is None else tol
    K = len(modes)
    Mx = np.zeros((2 * K, 2 * K), dtype=complex)
    sides = (("L", drive.omega_L, drive.phi_L, coupling.alpha_L, coupling.S_L),
             ("R", drive.omega_R, drive.phi_R, coupling.alpha_R, coupling.S_R))

    def hit(x):
        return abs(x) <= tol

    for a, n in enumerate(modes):
        kn = k[n - 1]
        for _, Om, ph, alpha, S in sides:
            e, ec = cmath.exp(1j * ph), cmath.exp(-1j * ph)
            if hit(Om - 2 * kn):
                Mx[a, K + a] += -alpha[n - 1] * ec
                Mx[K + a, a] += -alpha[n - 1] * e
            for b, m in enumerate(modes):
                if m == n:
                    continue
                km = k[m - 1]
                s = S[n - 1, m - 1]
                if hit(Om - (km - kn)):
                    Mx[a, b] += s * e
                    Mx[K + a, K + b] += s * ec
                if hit(Om - (kn - km)):
                    Mx[a, b] += -s * ec
                    Mx[K + a, K + b] += -s * e
                if hit(Om - (kn + km)):
                    Mx[a, K + b] += -s * ec
                    Mx[K + a, b] += -s * e
        Mx[a] /= 4 * kn
        Mx[K + a] /= 4 * kn
    return Mx


def _pair_matrix(coupling, n, m, phi_R, case, with_alpha_m=True):
    """4x4 matrix for [A_n, A_m, B_n, B_m] in the two-frequency cases (phi_L = 0)."""
    k = coupling.k
    kn, km = k[n - 1], k[m - 1]
    e, ec = cmath.exp(1j * phi_R), cmath.exp(-1j * phi_R)
    R = coupling.S_R[n - 1, m - 1]
    if case == CASE_DIAGONAL_DIFFERENCE:
        an = coupling.alpha_L[n - 1]
        am = coupling.alpha_L[m - 1] if with_alpha_m else 0.0
        rows = [[0, R * e, -an, 0],
                [-R * ec, 0, 0, -am],
                [-an, 0, 0, R * ec],
                [0, -am, -R * e, 0]]
    elif case == CASE_SUM_DIFFERENCE:
        L = coupling.S_L[n - 1, m - 1]
        rows = [[0, R * e, 0, -L],
                [-R * ec, 0, -L, 0],
                [0, -L, 0, R * ec],
                [-L, 0, -R * e, 0]]
    else:
        raise CaseUnmatched(f"unknown two-frequency case {case!r}")
    Mx = np.array(rows, dtype=complex)
    Mx /= np.array([4 * kn, 4 * km, 4 * kn, 4 * km])[:, None]
    return Mx


def closed_form_eigenvalues(alpha_n, alpha_m, S, k_n, k_m, phi_R) -> np.ndarray:
    """Closed-form roots lambda = +-sqrt(X +- sqrt(X1 + X2 cos 2 phi_R)) of the diagonal/difference case.

    With a = alpha_n/(4 k_n), b = alpha_m/(4 k_m), s^2 = S^2/(16 k_n k_m):
    X = (a^2 + b^2)/2 - s^2, X1 = (a^2 - b^2)^2/4 - s^2 (a^2 + b^2), X2 = -2 s^2 a b.
    """
    a = alpha_n / (4 * k_n)
    b = alpha_m / (4 * k_m)
    s2 = S * S / (16 * k_n * k_m)
    X = 0.5 * (a * a + b * b) - s2
    X1 = 0.25 * (a * a - b * b) ** 2 - s2 * (a * a + b * b)
    X2 = -2 * s2 * a * b
    r = np.sqrt(complex(X1 + X2 * math.cos(2 * phi_R)))
    return np.array([sg * np.sqrt(X + s2_ * r) for sg in (1, -1) for s2_ in (1, -1)])


@dataclass(frozen=True)
class TwoFrequencyResult:
    eigenvalues: np.ndarray
    closed_form: np.ndarray | None
    rate: float
    no_growth: bool


def _growth(ev, matrix) -> float:
    """Largest real part, with round-off noise clamped to 0.

    Degenerate (Jordan-block) spectra at the stability boundary pick up
    real parts of order sqrt(machine epsilon) times the matrix scale, so the
    threshold is relative to the largest matrix entry.
    """
    r = float(np.max(ev.real))
    scale = float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0
    return r if r > GROWTH_TOL * max(1e-300, scale) else 0.0


def _match_eigs(a, b):
    return max(min(abs(b - x)) for x in a)


def two_frequency_eigenvalues(coupling: CouplingSet, n: int, m: int, phi_R: float, case: str,
                              drive: DriveConfig | None = None, tol: float = 1e-9,
                              with_alpha_m: bool = True) -> TwoFrequencyResult:
    """Eigenvalues of the 4x4 slow-amplitude matrix for two distinct drive frequencies.

    ``case`` is "2kn,km-kn" (Omega_L = 2 k_n, Omega_R = k_m - k_n) or
    "kn+km,km-kn" (Omega_L = k_n + k_m, Omega_R = k_m - k_n), with k_m > k_n
    and phi_L = 0. For the first case the closed form is evaluated as well
    and must agree with the matrix to 1e-10 (absolute, scaled by the largest
    eigenvalue). ``with_alpha_m`` keeps the alpha_m^L entry of mode m in the
    first case; first-order averaging drops it because Omega_L != 2 k_m.
    When ``drive`` is given its frequencies must fit the case pattern within
    ``tol`` (relative to k_1), else :class:`CaseUnmatched`.
    """
    k = coupling.k
    if not k[m - 1] > k[n - 1]:
        raise CaseUnmatched(f"need k_m > k_n, got modes n={n}, m={m}")
    kn, km = k[n - 1], k[m - 1]
    if case == CASE_DIAGONAL_DIFFERENCE:
        want = (2 * kn, km - kn)
    elif case == CASE_SUM_DIFFERENCE:
        want = (kn + km, km - kn)
    else:
        raise CaseUnmatched(f"unknown two-frequency case {case!r}")
    if drive is not None:
        t = tol * k[0]
        if abs(drive.omega_L - want[0]) > t or abs(drive.omega_R - want[1]) > t:
            raise CaseUnmatched(f"drive ({drive.omega_L:.10g}, {drive.omega_R:.10g}) does not match "
                                f"case {case} = ({want[0]:.10g}, {want[1]:.10g})")
    Mx = _pair_matrix(coupling, n, m, phi_R, case, with_alpha_m)
    ev = np.linalg.eigvals(Mx)
    closed = None
    if case == CASE_DIAGONAL_DIFFERENCE:
        am = coupling.alpha_L[m - 1] if with_alpha_m else 0.0
        closed = closed_form_eigenvalues(coupling.alpha_L[n - 1], am, coupling.S_R[n - 1, m - 1],
                                         kn, km, phi_R)
        scale = max(1.0, float(np.max(np.abs(ev))))
        gap = max(_match_eigs(ev, closed), _match_eigs(closed, ev))
        if gap > CLOSED_FORM_TOL * scale:
            raise AssertionError(f"closed form disagrees with matrix eigenvalues by {gap:.3g}")
    rate = _growth(ev, Mx)
    return TwoFrequencyResult(ev, closed, rate, no_growth=rate == 0.0)


@dataclass(frozen=True)
class MsaPrediction:
    """Leading-order prediction for a drive; ``rate`` is the slow-amplitude growth rate."""

    regime: str
    rate: float
    oscillatory: bool
    report: ResonanceReport
    phi_R: float
    eigenvalues: np.ndarray | None = None
    mode_rates: dict = field(default_factory=dict)
    beat_frequency: float | None = None
    no_growth: bool = False
    case: str | None = None

    @property
    def growing(self) -> bool:
        return self.rate > 0 and not self.oscillatory

    def to_dict(self) -> dict:
        out = {
            "regime": self.regime,
            "rate": self.rate,
            "particle_rate": 2 * self.rate,
            "oscillatory": self.oscillatory,
            "no_growth": self.no_growth,
            "phi_R_relative": self.phi_R,
            "mode_rates": {str(n): r for n, r in self.mode_rates.items()},
            "beat_frequency": self.beat_frequency,
            "case": self.case,
            **self.report.to_dict(),
        }
        if self.eigenvalues is not None:
            out["eigenvalues_re"] = self.eigenvalues.real.tolist()
            out["eigenvalues_im"] = self.eigenvalues.imag.tolist()
        return out

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path


def _components(Mx, K):
    """Connected groups of modes (0-based) linked by nonzero slow-amplitude entries."""
    adj = (np.abs(Mx[:K, :K]) + np.abs(Mx[:K, K:]) + np.abs(Mx[K:, :K]) + np.abs(Mx[K:, K:])) > 0
    seen, groups = set(), []
    for start in range(K):
        if start in seen:
            continue
        stack, grp = [start], []
        seen.add(start)
        while stack:
            a = stack.pop()
            grp.append(a)
            for b in np.nonzero(adj[a] | adj[:, a])[0]:
                if b not in seen:
                    seen.add(int(b))
                    stack.append(int(b))
        groups.append(sorted(grp))
    return groups


def _mode_rates(Mx):
    K = Mx.shape[0] // 2
    rates = {}
    for grp in _components(Mx, K):
        idx = grp + [K + g for g in grp]
        sub = Mx[np.ix_(idx, idx)]
        if not np.any(sub):
            continue
        r = _growth(np.linalg.eigvals(sub), sub)
        for g in grp:
            rates[g + 1] = r
    return rates


def predict(table: ModeTable, coupling: CouplingSet, drive: DriveConfig, tol: float | None = None,
            with_alpha_m: bool = False) -> MsaPrediction:
    """Classify the drive and evaluate the matching leading-order prediction.

    Phases are rotated so that phi_L = 0; only phi_R - phi_L enters. Drives
    matching none of the treated patterns get regime "general", evaluated
    from the full slow-amplitude matrix.
    """
    tol = default_tolerance(table) if tol is None else tol
    phi_R = math.remainder(drive.phi_R - drive.phi_L, 2 * math.pi)
    rot = replace(drive, phi_L=0.0, phi_R=phi_R)
    report = classify_resonances(table, rot, tol)
    if not report:
        return MsaPrediction("none", 0.0, False, report, phi_R)
    Mx = slow_amplitude_matrix(coupling, rot, tol=tol)
    mode_rates = _mode_rates(Mx)
    L, R = report.on_side("L"), report.on_side("R")
    same = abs(rot.omega_L - rot.omega_R) <= tol

    if same and len(L) == 1 and len(R) == 1:
        c = L[0]
        if c.kind == DIAGONAL:
            (n,) = c.modes
            g = single_mode_rate(coupling, n, phi_R)
            return MsaPrediction("single-mode", g, False, report, phi_R, mode_rates={n: g})
        n, m = c.modes
        if c.kind == SUM:
            g = two_mode_sum_rate(coupling, n, m, phi_R)
            return MsaPrediction("two-mode-sum", g, False, report, phi_R, mode_rates={n: g, m: g})
        beh = two_mode_difference_behavior(coupling, n, m, phi_R)
        return MsaPrediction("two-mode-difference", 0.0, True, report, phi_R,
                             mode_rates={n: 0.0, m: 0.0}, beat_frequency=beh.beat_frequency)

    if not same and len(L) == 1 and len(R) == 1 and R[0].kind == DIFFERENCE:
        n, m = R[0].modes
        cl = L[0]
        case = None
        if cl.kind == DIAGONAL and cl.modes == (n,):
            case = CASE_DIAGONAL_DIFFERENCE
        elif cl.kind == SUM and cl.modes == (n, m):
            case = CASE_SUM_DIFFERENCE
        if case is not None:
            res = two_frequency_eigenvalues(coupling, n, m, phi_R, case, with_alpha_m=with_alpha_m)
            rates = dict(mode_rates)
            rates.update({n: res.rate, m: res.rate})
            return MsaPrediction("two-frequency", res.rate, res.no_growth, report, phi_R,
                                 eigenvalues=res.eigenvalues, mode_rates=rates,
                                 no_growth=res.no_growth, case=case)

    ev = np.linalg.eigvals(Mx)
    rate = _growth(ev, Mx)
    return MsaPrediction("general", rate, rate == 0.0, report, phi_R, eigenvalues=ev,
                         mode_rates=mode_rates, no_growth=rate == 0.0)
