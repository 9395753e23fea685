"""Brute-force ground truth from finite sections.

The operator is cut to a window of ``N`` sites with hard truncation (every
coupling that leaves the window is dropped) and resolvent entries come from a
direct LU solve with partial pivoting.  Nothing here uses the recursion, the
gluing or the Schur reduction, so agreement with :mod:`dirac_green.green` is
a genuine cross-check.

Spinor components are interleaved, spin-up first: site ``lo + s`` holds rows
``2 s`` (up) and ``2 s + 1`` (down).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _backend
from .errors import NotHermitian, SingularSystem
from .model import HalfLine, OperatorSpec
from .potentials import BumpTable, PotentialPair, Sequence

__all__ = [
    "section_window",
    "finite_section_dirac",
    "finite_section_jacobi",
    "finite_section_green",
    "hermitian_eigs",
    "eig_residuals",
    "EmbeddedDemo",
    "embedded_eigenvalue_demo",
    "block_spectrum",
    "MAX_EIG_DIM",
]

MAX_EIG_DIM = 1000


def section_window(spec: OperatorSpec, N: int) -> int:
    """First site of the default ``N``-site window.

    Half-line: ``start .. start + N - 1``; full line: ``-N/2 .. N/2 - 1``.
    """
    return spec.lattice.start if spec.lattice.is_half else -(N // 2)


def _dirac_entries(spec: OperatorSpec, N: int, lo: int):
    n = np.arange(lo, lo + N)
    p = spec.potential
    m = spec.mass
    up = 2 * np.arange(N)
    dn = up + 1
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(np.broadcast_to(np.asarray(v, dtype=complex), r.shape))

    put(up, up, m + p.V1(n))
    put(dn, dn, -m + p.V2(n))
    diag_d = 1.0 + p.W1(n)              # dt[n, n]
    put(up, dn, diag_d)
    put(dn, up, np.conj(diag_d))
    off_d = -1.0 + p.W2(n[:-1])         # dt[n, n + 1]
    put(up[:-1], dn[1:], off_d)
    put(dn[1:], up[:-1], np.conj(off_d))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _jacobi_entries(spec: OperatorSpec, N: int, lo: int):
    n = np.arange(lo, lo + N)
    idx = np.arange(N)
    diag = 2.0 + spec.potential.V1(n).astype(complex)
    if spec.lattice.is_half and lo == spec.lattice.start:
        diag[0] -= 1.0
    off = -np.ones(N - 1, dtype=complex)
    rows = np.concatenate([idx, idx[:-1], idx[1:]])
    cols = np.concatenate([idx, idx[1:], idx[:-1]])
    return rows, cols, np.concatenate([diag, off, off])


def _dense(rows, cols, vals, dim):
    M = np.zeros((dim, dim), dtype=complex)
    np.add.at(M, (rows, cols), vals)
    return M


def _check_window(spec, N, lo):
    if N < 2:
        raise ValueError("a finite section needs N >= 2")
    if spec.lattice.is_half and lo < spec.lattice.start:
        raise ValueError("window starts left of the half-line")


def finite_section_dirac(spec: OperatorSpec, N: int, lo: int | None = None) -> np.ndarray:
    """Dense ``2N x 2N`` matrix of ``H`` on sites ``lo .. lo + N - 1``.

    The half-line boundary convention is automatic: the section of ``H`` on
    ``Z_k`` is the principal block of the full-line matrix.
    """
    if spec.is_jacobi:
        raise ValueError("finite_section_dirac needs a Dirac-mode spec")
    lo = section_window(spec, N) if lo is None else int(lo)
    _check_window(spec, N, lo)
    return _dense(*_dirac_entries(spec, N, lo), 2 * N)


def finite_section_jacobi(spec: OperatorSpec, N: int, lo: int | None = None) -> np.ndarray:
    """Dense ``N x N`` matrix of ``Delta + V`` (diagonal 1 at a half-line start)."""
    lo = section_window(spec, N) if lo is None else int(lo)
    _check_window(spec, N, lo)
    return _dense(*_jacobi_entries(spec, N, lo), N)


def _banded(rows, cols, vals, dim, bw):
    ab = np.zeros((2 * bw + 1, dim), dtype=complex)
    np.add.at(ab, (bw + rows - cols, cols), vals)
    return ab


def _index(spec, lo, N, key):
    site, spin = key
    s = int(site) - lo
    if not 0 <= s < N:
        raise ValueError(f"site {site} is outside the section {lo}..{lo + N - 1}")
    if spec.is_jacobi:
        return s
    if spin not in ("up", "down"):
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    return 2 * s + (spin == "down")


def finite_section_green(spec: OperatorSpec, lam, N: int, entry=None, target=None, *,
                         lo: int | None = None, method: str = "banded") -> complex:
    """``<target, (M - lam)^{-1} entry>`` for the finite section ``M``.

    Parameters
    ----------
    spec : OperatorSpec
    lam : complex
        ``Im lam != 0``.
    N : int
        Number of lattice sites in the section.
    entry : (site, spin)
        Source basis vector; default spin-down at the first half-line site
        (site 0 on the full line).  Spins are ignored in Jacobi mode.
    target : (site, spin), optional
        Defaults to ``entry`` (a diagonal element).
    lo : int, optional
        First site of the window (default :func:`section_window`).
    method : {"banded", "dense"}
        ``"banded"`` runs LAPACK's banded LU with partial pivoting on the
        7-diagonal (3 for Jacobi) storage; ``"dense"`` factors the full
        matrix and is meant for small ``N``.

    Raises
    ------
    SingularSystem
        A pivot vanished (impossible for Hermitian ``M`` and ``Im lam != 0``).
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("finite_section_green needs Im lam != 0")
    lo = section_window(spec, N) if lo is None else int(lo)
    _check_window(spec, N, lo)
    if entry is None:
        entry = (spec.lattice.start if spec.lattice.is_half else 0, "down")
    target = entry if target is None else target
    if spec.is_jacobi:
        rows, cols, vals = _jacobi_entries(spec, N, lo)
        dim, bw = N, 1
    else:
        rows, cols, vals = _dirac_entries(spec, N, lo)
        dim, bw = 2 * N, 3
    src = _index(spec, lo, N, entry)
    tgt = _index(spec, lo, N, target)
    rows = np.concatenate([rows, np.arange(dim)])
    cols = np.concatenate([cols, np.arange(dim)])
    vals = np.concatenate([vals, np.full(dim, -lam)])
    rhs = np.zeros(dim, dtype=complex)
    rhs[src] = 1.0
    try:
        if method == "banded":
            x = scipy.linalg.solve_banded((bw, bw), _banded(rows, cols, vals, dim, bw), rhs,
                                          check_finite=False)
        elif method == "dense":
            lu, piv = scipy.linalg.lu_factor(_dense(rows, cols, vals, dim), check_finite=False)
            if np.min(np.abs(np.diag(lu))) == 0:
                raise SingularSystem("zero pivot in the finite-section LU")
            x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
        else:
            raise ValueError(f"unknown method {method!r}")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite finite-section solution")
    return complex(x[tgt])


def hermitian_eigs(M, *, vectors: bool = False, tol: float = 1e-15, backend=None):
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    M : (n, n) array_like
        Must satisfy ``max |M - M^*| <= 1e-12``; ``n <= 1000``.
    vectors : bool
        Also return the unit eigenvectors as columns.

    Returns
    -------
    w : ndarray
        Ascending eigenvalues.
    V : ndarray, only with ``vectors=True``

    Raises
    ------
    NotHermitian
    """
    A = np.array(M, dtype=complex, order="C", copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] > MAX_EIG_DIM:
        raise ValueError(f"dimension {A.shape[0]} exceeds the eigensolver cap {MAX_EIG_DIM}")
    if A.size and np.max(np.abs(A - A.conj().T)) > 1e-12:
        raise NotHermitian("matrix is not Hermitian within 1e-12")
    A = 0.5 * (A + A.conj().T)
    if A.shape[0] == 0:
        w, V = np.zeros(0), np.zeros((0, 0), dtype=complex)
    else:
        kern = backend or _backend.get_backend()
        w, V, _ = kern.jacobi_eigh(A, tol)
    order = np.argsort(w, kind="stable")
    w = np.asarray(w)[order]
    V = np.asarray(V)[:, order]
    return (w, V) if vectors else w


def eig_residuals(M, w, V) -> np.ndarray:
    """``||M v - mu v||`` for every returned pair."""
    M = np.asarray(M)
    return np.linalg.norm(M @ V - V * w[None, :], axis=0)


def block_spectrum(n0: int, m: float) -> np.ndarray:
    """``+-sqrt(m^2 + 4 sin^2(k pi / (2 n0)))`` for ``k = 0..n0-1``, ascending, with multiplicity."""
    k = np.arange(n0)
    r = np.sqrt(m * m + 4.0 * np.sin(k * math.pi / (2 * n0)) ** 2)
    return np.sort(np.concatenate([-r, r]))


@dataclass
class EmbeddedDemo:
    """Outcome of :func:`embedded_eigenvalue_demo`."""

    n0: int
    mass: float
    cut_site: int
    eigenvalues: np.ndarray
    predicted: np.ndarray
    max_error: float
    decoupled: bool
    embedded: list = field(default_factory=list)
    extension_residual: float = 0.0
    tol: float = 1e-8

    @property
    def passed(self) -> bool:
        return bool(self.decoupled and self.max_error <= self.tol and all(self.embedded)
                    and self.extension_residual <= self.tol)

    def to_dict(self) -> dict:
        return {
            "n0": self.n0,
            "mass": self.mass,
            "cut_site": self.cut_site,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "predicted": [float(v) for v in self.predicted],
            "residuals": [float(abs(a - b)) for a, b in zip(self.eigenvalues, self.predicted)],
            "max_error": float(self.max_error),
            "decoupled": self.decoupled,
            "embedded": list(map(bool, self.embedded)),
            "extension_residual": float(self.extension_residual),
            "tol": self.tol,
            "passed": self.passed,
        }


def embedded_eigenvalue_demo(n0: int, m: float = 0.0, *, extra: int = 8, tol: float = 1e-8,
                             backend=None) -> EmbeddedDemo:
    """Eigenvalues produced by cutting the half-line with ``W1 = -1``, ``W2 = 1``.

    With ``V = 0`` on ``Z_0`` and ``W1(n0 - 1) = -1``, ``W2(n0 - 1) = 1`` (zero
    elsewhere) both couplings between sites ``n0 - 1`` and ``n0`` vanish and
    also the spin-up/spin-down coupling inside site ``n0 - 1``.  The first
    ``n0`` sites then form an invariant ``2 n0``-dimensional block whose
    spectrum is ``+-sqrt(m^2 + 4 sin^2(k pi / (2 n0)))``, ``k = 0..n0-1``.

    The block is cut from a larger section (``n0 + extra`` sites) so the
    decoupling itself is checked, and every block eigenvector, extended by
    zero, is checked to be an eigenvector of the larger section.
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    cut = n0 - 1
    pot = PotentialPair(W1=Sequence(BumpTable({cut: -1.0})), W2=Sequence(BumpTable({cut: 1.0})))
    spec = OperatorSpec(mass=m, lattice=HalfLine(0), potential=pot)
    N = n0 + extra
    M = finite_section_dirac(spec, N)
    b = 2 * n0
    decoupled = bool(np.all(M[:b, b:] == 0) and np.all(M[b:, :b] == 0))
    w, V = hermitian_eigs(M[:b, :b], vectors=True, backend=backend)
    pred = block_spectrum(n0, m)
    err = float(np.max(np.abs(w - pred)))
    top = math.sqrt(m * m + 4.0)
    slack = 1e-12
    embedded = [bool(m - slack <= abs(v) <= top + slack) for v in w]
    Vfull = np.zeros((2 * N, b), dtype=complex)
    Vfull[:b] = V
    ext = float(np.max(eig_residuals(M, w, Vfull)))
    return EmbeddedDemo(n0, float(m), cut, w, pred, err, decoupled, embedded, ext, tol)
