"""Pure-Python reference implementations of the compiled kernels.

These run when the extension module is unavailable (or when
``DIRAC_GREEN_PURE=1`` is set) and serve as the reference the compiled
versions are tested against.
"""
from __future__ import annotations

import cmath
import math

import numpy as np


def _compose_step(s, a, b, c):
    A, B, C, D = s
    A1, B1, C1, D1 = b, c, a * b - 1.0, a * c
    nA = A * C1 - B * A1
    nB = A * D1 - B * B1
    nC = C * C1 - D * A1
    nD = C * D1 - D * B1
    m = max(abs(nA), abs(nB), abs(nC), abs(nD))
    return [nA / m, nB / m, nC / m, nD / m]


def _fixed_point(h):
    A, B, C, D = h
    p = B + C
    scale = max(abs(A), abs(p), abs(D))
    if abs(D) <= 1e-15 * scale:
        if p == 0:
            return None
        z = -A / p
    else:
        s = cmath.sqrt(p * p - 4.0 * A * D)
        if (p.real * s.real + p.imag * s.imag) < 0:
            s = -s
        q = -0.5 * (p + s)
        if q == 0:
            return None
        r1, r2 = q / D, A / q
        z = r1 if r1.imag >= r2.imag else r2
    if not (z.imag > 1e-14 * max(1.0, abs(z))):
        return None
    return z


def _hdist(z1, z2):
    return 2.0 * math.asinh(abs(z1 - z2) / (2.0 * math.sqrt(z1.imag * z2.imag)))


def fold_chunk(a, b, c, n_steps, nu, check_every, depth0, periodic, tol,
               state, prev, have_prev):
    """Fold ``n_steps`` maps into the running composite ``state``.

    Parameters
    ----------
    a, b, c : 1-D arrays
        Coefficients of ``Phi_k`` for ``k = depth0, depth0 + 1, ...``.  With
        ``periodic`` they must hold ``nu`` extra entries of look-ahead.
    n_steps : int
    nu : int
        Period of the fixed-point seed.
    check_every : int
        The composite is evaluated whenever the global depth is a multiple
        of this number.
    depth0 : int
        Global depth before this chunk.
    periodic : bool
        Seed with the fixed point of the next ``nu`` maps (falls back to
        ``i`` when that fixed point is missing) instead of ``i``.
    tol : float
        Stop when two consecutive evaluations are closer than ``tol`` in the
        hyperbolic metric.
    state : complex array of length 4
        Running composite ``(A, B, C, D)``; updated in place.
    prev : complex
    have_prev : bool
        Last evaluation carried over from the previous chunk.

    Returns
    -------
    tuple
        ``(steps_done, converged, value, residual, prev, have_prev,
        seed_failures)``.  ``residual`` is -1 when no comparison was made in
        this chunk and -2 when the evaluation left the half-plane.
    """
    if len(a) < n_steps + (nu if periodic else 0):
        raise ValueError("coefficient arrays too short for the requested look-ahead")
    st = [complex(v) for v in state]
    a = [complex(v) for v in a]
    b = [complex(v) for v in b]
    c = [float(v) for v in c]
    value = 0j
    residual = -1.0
    fails = 0
    converged = False
    done = 0
    for s in range(n_steps):
        st = _compose_step(st, a[s], b[s], c[s])
        done = s + 1
        if (depth0 + done) % check_every:
            continue
        seed = 1j
        if periodic:
            h = [0j, 1 + 0j, -1 + 0j, 0j]
            for j in range(done, done + nu):
                h = _compose_step(h, a[j], b[j], c[j])
            z = _fixed_point(h)
            if z is None:
                fails += 1
            else:
                seed = z
        value = -(st[0] + st[1] * seed) / (st[2] + st[3] * seed)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)) or value.imag <= 0:
            residual = -2.0
            break
        if have_prev:
            residual = _hdist(value, prev)
            if residual < tol:
                converged = True
                prev = value
                break
        prev = value
        have_prev = True
    state[:] = st
    return done, converged, value, residual, prev, have_prev, fails


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Cyclic complex Jacobi on a Hermitian matrix (modified in place).

    Returns ``(eigenvalues, eigenvectors, sweeps)``; eigenvalues unsorted.
    """
    n = A.shape[0]
    Vt = np.eye(n, dtype=np.complex128)  # conjugate eigenvectors as rows
    norm2 = float(np.sum(np.abs(A) ** 2))
    sweep = 0
    for sweep in range(max_sweeps):
        off = float(np.sum(np.abs(np.triu(A, 1)) ** 2))
        if off <= tol * tol * norm2 or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                beta = abs(A[p, q])
                if beta == 0.0:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                e = A[p, q] / beta
                tau = (aqq - app) / (2.0 * beta)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = t * cs
                # R = [[c, s], [-s ebar, c ebar]]; A <- R^H A R
                x = A[p, :].copy()
                y = e * A[q, :]
                A[p, :] = cs * x - sn * y
                A[q, :] = sn * x + cs * y
                A[:, p] = A[p, :].conj()
                A[:, q] = A[q, :].conj()
                A[p, p] = cs * cs * app + sn * sn * aqq - 2.0 * cs * sn * beta
                A[q, q] = sn * sn * app + cs * cs * aqq + 2.0 * cs * sn * beta
                A[p, q] = 0.0
                A[q, p] = 0.0
                x = Vt[p, :].copy()
                y = e * Vt[q, :]
                Vt[p, :] = cs * x - sn * y
                Vt[q, :] = sn * x + cs * y
    return np.real(np.diag(A)).copy(), np.ascontiguousarray(Vt.conj().T), sweep
