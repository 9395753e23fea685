# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the renormalized homography fold and cyclic Jacobi.

Both functions mirror :mod:`dirac_green._pure` line for line; the pure
versions are the reference and the test-suite checks the two agree.
"""
from libc.math cimport sqrt, fabs, hypot, asinh, copysign, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs(cplx z) nogil:
    return hypot(z.real, z.imag)


cdef inline cplx csqrt_(cplx z) nogil:
    cdef double x = z.real, y = z.imag, r, t
    r = hypot(x, y)
    if r == 0.0:
        return 0.0
    if x >= 0.0:
        t = sqrt(0.5 * (r + x))
        return t + 1j * (y / (2.0 * t))
    t = sqrt(0.5 * (r - x))
    return fabs(y) / (2.0 * t) + 1j * copysign(t, y)


cdef inline double hdist(cplx z1, cplx z2) nogil:
    return 2.0 * asinh(cabs(z1 - z2) / (2.0 * sqrt(z1.imag * z2.imag)))


cdef inline void compose_step(cplx* s, cplx a, cplx b, double c) nogil:
    # s <- s o phi_{a,b,c}; phi has block (b, c, ab - 1, ac)
    cdef cplx A1 = b, B1 = c, C1 = a * b - 1.0, D1 = a * c
    cdef cplx A = s[0], B = s[1], C = s[2], D = s[3]
    cdef cplx nA = A * C1 - B * A1
    cdef cplx nB = A * D1 - B * B1
    cdef cplx nC = C * C1 - D * A1
    cdef cplx nD = C * D1 - D * B1
    cdef double m = cabs(nA), t
    t = cabs(nB)
    if t > m:
        m = t
    t = cabs(nC)
    if t > m:
        m = t
    t = cabs(nD)
    if t > m:
        m = t
    s[0] = nA / m
    s[1] = nB / m
    s[2] = nC / m
    s[3] = nD / m


cdef inline int fixed_point(cplx* h, cplx* out) nogil:
    # upper half-plane root of D z^2 + (B + C) z + A = 0; returns 0 on failure
    cdef cplx A = h[0], p = h[1] + h[2], D = h[3], s, q, r1, r2, z
    cdef double scale = cabs(A), t
    t = cabs(p)
    if t > scale:
        scale = t
    t = cabs(D)
    if t > scale:
        scale = t
    if cabs(D) <= 1e-15 * scale:
        if p == 0:
            return 0
        z = -A / p
    else:
        s = csqrt_(p * p - 4.0 * A * D)
        if (p.real * s.real + p.imag * s.imag) < 0:
            s = -s
        q = -0.5 * (p + s)
        if q == 0:
            return 0
        r1 = q / D
        r2 = A / q
        z = r1 if r1.imag >= r2.imag else r2
    t = cabs(z)
    if t < 1.0:
        t = 1.0
    if not (z.imag > 1e-14 * t):
        return 0
    out[0] = z
    return 1


cdef inline cplx happly(cplx* h, cplx z) nogil:
    return -(h[0] + h[1] * z) / (h[2] + h[3] * z)


def fold_chunk(const cplx[::1] a, const cplx[::1] b, const double[::1] c,
               Py_ssize_t n_steps, Py_ssize_t nu, Py_ssize_t check_every,
               Py_ssize_t depth0, bint periodic, double tol,
               cplx[::1] state, cplx prev, bint have_prev):
    """Fold ``n_steps`` maps into ``state`` with residual checks.

    See :func:`dirac_green._pure.fold_chunk` for the contract.
    """
    cdef Py_ssize_t s, j, depth
    cdef cplx st[4]
    cdef cplx h[4]
    cdef cplx seed, value = 0
    cdef double residual = -1.0
    cdef int fails = 0, converged = 0
    cdef Py_ssize_t done = 0
    if a.shape[0] < n_steps + (nu if periodic else 0):
        raise ValueError("coefficient arrays too short for the requested look-ahead")
    for j in range(4):
        st[j] = state[j]
    with nogil:
        for s in range(n_steps):
            compose_step(st, a[s], b[s], c[s])
            done = s + 1
            depth = depth0 + done
            if depth % check_every != 0:
                continue
            seed = 1j
            if periodic:
                h[0] = 0.0
                h[1] = 1.0
                h[2] = -1.0
                h[3] = 0.0
                for j in range(done, done + nu):
                    compose_step(h, a[j], b[j], c[j])
                if not fixed_point(h, &seed):
                    seed = 1j
                    fails += 1
            value = happly(st, seed)
            if not (isfinite(value.real) and isfinite(value.imag)) or value.imag <= 0:
                residual = -2.0
                break
            if have_prev:
                residual = hdist(value, prev)
                if residual < tol:
                    converged = 1
                    prev = value
                    break
            prev = value
            have_prev = 1
    for j in range(4):
        state[j] = st[j]
    return done, bool(converged), value, residual, prev, bool(have_prev), fails


def jacobi_eigh(cplx[:, ::1] A, double tol=1e-15, int max_sweeps=100):
    """Cyclic Jacobi on a Hermitian matrix, in place.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with unsorted eigenvalues.
    Rows are rotated and mirrored into columns by Hermitian symmetry, and the
    eigenvectors are accumulated as rows, so every inner loop is contiguous.
    """
    cdef Py_ssize_t n = A.shape[0], p, q, k
    cdef int sweep = 0
    cdef double off, norm2, app, aqq, beta, tau, t, cs, sn
    cdef cplx e
    cdef double er, ei, xr, xi, yr, yi, ur, ui, vr, vi
    Vt_arr = np.eye(n, dtype=np.complex128)
    cdef cplx[:, ::1] Vt = Vt_arr
    norm2 = 0.0
    for p in range(n):
        for q in range(n):
            norm2 += A[p, q].real * A[p, q].real + A[p, q].imag * A[p, q].imag
    with nogil:
        for sweep in range(max_sweeps):
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += A[p, q].real * A[p, q].real + A[p, q].imag * A[p, q].imag
            if off <= tol * tol * norm2 or off == 0.0:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    beta = cabs(A[p, q])
                    if beta == 0.0:
                        continue
                    app = A[p, p].real
                    aqq = A[q, q].real
                    e = A[p, q] / beta
                    er = e.real
                    ei = e.imag
                    tau = (aqq - app) / (2.0 * beta)
                    if tau >= 0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    cs = 1.0 / sqrt(1.0 + t * t)
                    sn = t * cs
                    # R = [[c, s], [-s ebar, c ebar]]; A <- R^H A R, in real arithmetic
                    for k in range(n):
                        if k == p or k == q:
                            continue
                        xr = A[p, k].real
                        xi = A[p, k].imag
                        yr = er * A[q, k].real - ei * A[q, k].imag
                        yi = er * A[q, k].imag + ei * A[q, k].real
                        ur = cs * xr - sn * yr
                        ui = cs * xi - sn * yi
                        vr = sn * xr + cs * yr
                        vi = sn * xi + cs * yi
                        A[p, k].real = ur
                        A[p, k].imag = ui
                        A[q, k].real = vr
                        A[q, k].imag = vi
                        A[k, p].real = ur
                        A[k, p].imag = -ui
                        A[k, q].real = vr
                        A[k, q].imag = -vi
                    A[p, p] = cs * cs * app + sn * sn * aqq - 2.0 * cs * sn * beta
                    A[q, q] = sn * sn * app + cs * cs * aqq + 2.0 * cs * sn * beta
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for k in range(n):
                        xr = Vt[p, k].real
                        xi = Vt[p, k].imag
                        yr = er * Vt[q, k].real - ei * Vt[q, k].imag
                        yi = er * Vt[q, k].imag + ei * Vt[q, k].real
                        Vt[p, k].real = cs * xr - sn * yr
                        Vt[p, k].imag = cs * xi - sn * yi
                        Vt[q, k].real = sn * xr + cs * yr
                        Vt[q, k].imag = sn * xi + cs * yi
    w = np.array([A[k, k].real for k in range(n)])
    return w, np.ascontiguousarray(Vt_arr.conj().T), sweep
