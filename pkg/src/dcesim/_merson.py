"""Compiled Runge-Kutta-Merson kernel for the driven mode equations.

The state is the real fundamental matrix of the mode equations: ``X`` holds
the mode functions and ``V`` their time derivatives, both of shape
(n_modes, 2 n_modes) with real parts of eps in the first n_modes columns and
imaginary parts in the rest. The acceleration is ``-K(t) X`` with

    K(t) = diag(k^2) - sin(Omega_L t + phi_L) P_L - sin(Omega_R t + phi_R) P_R

when the drive is active, and ``diag(k^2)`` otherwise.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _stiffness(t, active, ksq, PL, PR, OL, OR, phL, phR, K):
    n = ksq.shape[0]
    if active:
        sL = np.sin(OL * t + phL)
        sR = np.sin(OR * t + phR)
        for i in range(n):
            for j in range(n):
                K[i, j] = -(sL * PL[i, j] + sR * PR[i, j])
            K[i, i] += ksq[i]
    else:
        for i in range(n):
            for j in range(n):
                K[i, j] = 0.0
            K[i, i] = ksq[i]


@njit(cache=True)
def _accel(K, X, out):
    n, m = X.shape
    for i in range(n):
        for c in range(m):
            out[i, c] = 0.0
        for j in range(n):
            kij = K[i, j]
            if kij != 0.0:
                for c in range(m):
                    out[i, c] -= kij * X[j, c]


@njit(cache=True)
def merson_segment(X, V, t0, h, nsteps, stride, active, ksq, PL, PR, OL, OR, phL, phR,
                   rec_t, rec_X, rec_V):
    """Advance (X, V) in place by ``nsteps`` fixed steps of size ``h`` from ``t0``.

    Every ``stride`` steps the state is copied into the record buffers.
    Returns (records written, largest embedded error estimate, finite flag).
    """
    n, m = X.shape
    K = np.empty((n, n))
    a1 = np.empty_like(X)
    a2 = np.empty_like(X)
    a3 = np.empty_like(X)
    a4 = np.empty_like(X)
    a5 = np.empty_like(X)
    x = np.empty_like(X)
    v2 = np.empty_like(X)
    v3 = np.empty_like(X)
    v4 = np.empty_like(X)
    v5 = np.empty_like(X)
    h3 = h / 3.0
    h6 = h / 6.0
    h8 = h / 8.0
    h2 = h / 2.0
    err_max = 0.0
    nrec = 0
    for s in range(nsteps):
        t = t0 + s * h
        _stiffness(t, active, ksq, PL, PR, OL, OR, phL, phR, K)
        _accel(K, X, a1)
        for i in range(n):
            for c in range(m):
                x[i, c] = X[i, c] + h3 * V[i, c]
                v2[i, c] = V[i, c] + h3 * a1[i, c]
        _stiffness(t + h3, active, ksq, PL, PR, OL, OR, phL, phR, K)
        _accel(K, x, a2)
        for i in range(n):
            for c in range(m):
                x[i, c] = X[i, c] + h6 * (V[i, c] + v2[i, c])
                v3[i, c] = V[i, c] + h6 * (a1[i, c] + a2[i, c])
        _accel(K, x, a3)
        for i in range(n):
            for c in range(m):
                x[i, c] = X[i, c] + h8 * (V[i, c] + 3.0 * v3[i, c])
                v4[i, c] = V[i, c] + h8 * (a1[i, c] + 3.0 * a3[i, c])
        _stiffness(t + h2, active, ksq, PL, PR, OL, OR, phL, phR, K)
        _accel(K, x, a4)
        for i in range(n):
            for c in range(m):
                x[i, c] = X[i, c] + h2 * (V[i, c] - 3.0 * v3[i, c] + 4.0 * v4[i, c])
                v5[i, c] = V[i, c] + h2 * (a1[i, c] - 3.0 * a3[i, c] + 4.0 * a4[i, c])
        _stiffness(t + h, active, ksq, PL, PR, OL, OR, phL, phR, K)
        _accel(K, x, a5)
        scale = 1.0
        err = 0.0
        for i in range(n):
            for c in range(m):
                ex = abs(h * (2.0 * V[i, c] - 9.0 * v3[i, c] + 8.0 * v4[i, c] - v5[i, c])) / 30.0
                ev = abs(h * (2.0 * a1[i, c] - 9.0 * a3[i, c] + 8.0 * a4[i, c] - a5[i, c])) / 30.0
                X[i, c] += h6 * (V[i, c] + 4.0 * v4[i, c] + v5[i, c])
                V[i, c] += h6 * (a1[i, c] + 4.0 * a4[i, c] + a5[i, c])
                err = max(err, ex, ev)
                scale = max(scale, abs(X[i, c]), abs(V[i, c]))
        err_max = max(err_max, err / scale)
        if (s + 1) % stride == 0:
            finite = True
            for i in range(n):
                for c in range(m):
                    if not (np.isfinite(X[i, c]) and np.isfinite(V[i, c])):
                        finite = False
            if not finite:
                return nrec, err_max, False
            if nrec < rec_t.shape[0]:
                rec_t[nrec] = t0 + (s + 1) * h
                rec_X[nrec] = X
                rec_V[nrec] = V
                nrec += 1
    for i in range(n):
        for c in range(m):
            if not (np.isfinite(X[i, c]) and np.isfinite(V[i, c])):
                return nrec, err_max, False
    return nrec, err_max, True
