"""Operators on the lattice: the perturbed Dirac operator and its Schur blocks.

The Dirac operator acts on spinors ``f = (f1, f2)`` (spin-up, spin-down) as

    H f = ((m + V1) f1 + dt f2,  dt* f1 + (-m + V2) f2),

with ``dt = d + W1 + W2 tau``, ``d f(n) = f(n) - f(n+1)`` and
``tau f(n) = f(n+1)``.  On a half-line ``Z_k`` the adjoint ``dt*`` drops the
``f(k-1)`` term at the first site.  Eliminating ``f1`` gives the scalar
three-term operator

    Delta2 = dt* (lambda - m - V1)^{-1} dt - (lambda + m - V2),

whose inverse on ``Z_n`` has diagonal entry ``alpha_n`` at ``n``.  In Jacobi
mode the operator is the discrete Laplacian plus a scalar potential ``V``
(carried in ``V1``) and ``Delta2`` becomes ``Delta + V - lambda``.

All ``apply_*`` functions are exact on finitely supported input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import InvalidPotential
from .halfplane import MoebiusCoeffs
from .potentials import PotentialPair

__all__ = [
    "Lattice",
    "HalfLine",
    "FullLine",
    "OperatorSpec",
    "FiniteSequence",
    "SpinorVector",
    "apply_dirac",
    "apply_jacobi",
    "apply_delta2",
    "apply_delta1",
    "apply_U",
    "charge_conjugate",
    "shift_potential",
    "reflect_potential",
    "shift_spec",
    "left_half_spec",
    "recursion_coeffs",
    "recursion_arrays",
    "delta2_bands",
    "free_band_edges",
]

DIRAC = "dirac"
JACOBI = "jacobi"


@dataclass(frozen=True)
class Lattice:
    """``Z_k = {k, k+1, ...}`` (``kind="half"``) or ``Z`` (``kind="full"``)."""

    kind: str = "half"
    start: int = 0

    def __post_init__(self):
        if self.kind not in ("half", "full"):
            raise ValueError(f"lattice kind must be 'half' or 'full', got {self.kind!r}")
        if self.kind == "full":
            object.__setattr__(self, "start", 0)

    @property
    def is_half(self) -> bool:
        return self.kind == "half"

    def clip(self, lo: int) -> int:
        """Smallest site ``>= lo`` that belongs to the lattice."""
        return max(lo, self.start) if self.is_half else lo

    def contains(self, n: int) -> bool:
        return not self.is_half or n >= self.start


def HalfLine(k: int = 0) -> Lattice:
    return Lattice("half", int(k))


def FullLine() -> Lattice:
    return Lattice("full")


@dataclass(frozen=True)
class OperatorSpec:
    """Everything that defines one operator.

    Parameters
    ----------
    mass : float
        ``m >= 0``.  Ignored in Jacobi mode.
    lattice : Lattice
    potential : PotentialPair
    mode : {"dirac", "jacobi"}
    nu1, nu2 : int
        Period hints; the fixed-point seed uses ``nu = nu1 * nu2``.
    """

    mass: float = 0.0
    lattice: Lattice = field(default_factory=HalfLine)
    potential: PotentialPair = field(default_factory=PotentialPair)
    mode: str = DIRAC
    nu1: int = 1
    nu2: int = 1

    def __post_init__(self):
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be a finite non-negative number, got {self.mass!r}")
        if self.mode not in (DIRAC, JACOBI):
            raise ValueError(f"mode must be 'dirac' or 'jacobi', got {self.mode!r}")
        if int(self.nu1) < 1 or int(self.nu2) < 1:
            raise ValueError("period hints must be positive integers")
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "nu1", int(self.nu1))
        object.__setattr__(self, "nu2", int(self.nu2))

    @property
    def nu(self) -> int:
        return self.nu1 * self.nu2

    @property
    def is_jacobi(self) -> bool:
        return self.mode == JACOBI

    def with_lattice(self, lattice: Lattice) -> "OperatorSpec":
        return replace(self, lattice=lattice)

    def with_potential(self, potential: PotentialPair) -> "OperatorSpec":
        return replace(self, potential=potential)


# ---------------------------------------------------------------------------
# finitely supported sequences


@dataclass
class FiniteSequence:
    """Scalar sequence supported on ``start, ..., start + len(values) - 1``."""

    start: int
    values: np.ndarray

    def __post_init__(self):
        self.start = int(self.start)
        self.values = np.asarray(self.values, dtype=complex).ravel()

    @classmethod
    def delta(cls, n: int) -> "FiniteSequence":
        return cls(n, np.ones(1))

    @property
    def stop(self) -> int:
        return self.start + len(self.values)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def __getitem__(self, n: int) -> complex:
        i = int(n) - self.start
        return complex(self.values[i]) if 0 <= i < len(self.values) else 0j

    def on(self, lo: int, hi: int) -> np.ndarray:
        """Values on ``lo..hi-1`` with zero padding."""
        out = np.zeros(hi - lo, dtype=complex)
        s, e = max(lo, self.start), min(hi, self.stop)
        if s < e:
            out[s - lo:e - lo] = self.values[s - self.start:e - self.start]
        return out

    def __add__(self, other: "FiniteSequence") -> "FiniteSequence":
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        return FiniteSequence(lo, self.on(lo, hi) + other.on(lo, hi))

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k) -> "FiniteSequence":
        return FiniteSequence(self.start, k * self.values)

    def inner(self, other: "FiniteSequence") -> complex:
        """``<self, other>``, antilinear in ``self``."""
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        return complex(np.vdot(self.on(lo, hi), other.on(lo, hi)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


@dataclass
class SpinorVector:
    """Finitely supported ``(f1, f2)`` on ``start .. start + len - 1``."""

    start: int
    up: np.ndarray
    down: np.ndarray

    def __post_init__(self):
        self.start = int(self.start)
        self.up = np.asarray(self.up, dtype=complex).ravel()
        self.down = np.asarray(self.down, dtype=complex).ravel()
        if self.up.shape != self.down.shape:
            raise ValueError("spin components must have equal length")

    @classmethod
    def delta(cls, n: int, spin: str) -> "SpinorVector":
        """``(1,0) delta_n`` for ``spin="up"``, ``(0,1) delta_n`` for ``"down"``."""
        if spin not in ("up", "down"):
            raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
        one, zero = np.ones(1), np.zeros(1)
        return cls(n, one, zero) if spin == "up" else cls(n, zero, one)

    @property
    def stop(self) -> int:
        return self.start + len(self.up)

    def component(self, spin: str) -> FiniteSequence:
        return FiniteSequence(self.start, self.up if spin == "up" else self.down)

    def on(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        return (FiniteSequence(self.start, self.up).on(lo, hi),
                FiniteSequence(self.start, self.down).on(lo, hi))

    def __add__(self, other: "SpinorVector") -> "SpinorVector":
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        u1, d1 = self.on(lo, hi)
        u2, d2 = other.on(lo, hi)
        return SpinorVector(lo, u1 + u2, d1 + d2)

    def scale(self, k) -> "SpinorVector":
        return SpinorVector(self.start, k * self.up, k * self.down)

    def inner(self, other: "SpinorVector") -> complex:
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        u1, d1 = self.on(lo, hi)
        u2, d2 = other.on(lo, hi)
        return complex(np.vdot(u1, u2) + np.vdot(d1, d2))

    def max_abs(self) -> float:
        if not len(self.up):
            return 0.0
        return float(max(np.max(np.abs(self.up)), np.max(np.abs(self.down))))

    def __getitem__(self, key) -> complex:
        n, spin = key
        return self.component(spin)[n]


def _check_support(spec: OperatorSpec, start: int):
    if not spec.lattice.contains(start):
        raise ValueError(f"support starts at {start}, outside the lattice starting at "
                         f"{spec.lattice.start}")


# ---------------------------------------------------------------------------
# operators


def apply_dirac(spec: OperatorSpec, f: SpinorVector) -> SpinorVector:
    """Apply ``H_{m,V,W}`` to a finitely supported spinor."""
    if spec.is_jacobi:
        raise ValueError("apply_dirac needs a Dirac-mode spec; use apply_jacobi")
    _check_support(spec, f.start)
    lo = spec.lattice.clip(f.start - 1)
    hi = f.stop + 1
    n = np.arange(lo, hi)
    p = spec.potential
    m = spec.mass
    f1, f2 = f.on(lo, hi + 1)           # one extra site of look-ahead for tau
    f1m = np.concatenate([[0j], f1[:-1]])   # f1(n - 1)
    w1, w2 = p.W1(n), p.W2(n)
    w2m = p.W2(n - 1)
    if spec.lattice.is_half:
        # no f1(k - 1) term at the first site of Z_k
        w2m = np.where(n == spec.lattice.start, 1.0, w2m)
    up = (m + p.V1(n)) * f1[:-1] + (1.0 + w1) * f2[:-1] + (-1.0 + w2) * f2[1:]
    down = (1.0 + np.conj(w1)) * f1[:-1] + (-1.0 + np.conj(w2m)) * f1m[:-1] \
        + (-m + p.V2(n)) * f2[:-1]
    return SpinorVector(lo, up, down)


def apply_jacobi(spec: OperatorSpec, f: FiniteSequence) -> FiniteSequence:
    """Apply ``Delta + V`` (half-line Laplacian has diagonal 1 at the first site)."""
    _check_support(spec, f.start)
    lo = spec.lattice.clip(f.start - 1)
    hi = f.stop + 1
    n = np.arange(lo, hi)
    g = f.on(lo - 1, hi + 1)
    diag = np.full(len(n), 2.0)
    left = g[:-2].copy()
    if spec.lattice.is_half:
        at_start = n == spec.lattice.start
        diag[at_start] = 1.0
        left[at_start] = 0.0
    out = (diag + spec.potential.V1(n)) * g[1:-1] - left - g[2:]
    return FiniteSequence(lo, out)


def _validity(p: PotentialPair, n: np.ndarray):
    bad1 = np.abs(1.0 + p.W1(n)) == 0
    if np.any(bad1):
        site = int(n[np.argmax(bad1)])
        raise InvalidPotential(f"W1({site}) = -1: the recursion is undefined there", site)
    bad2 = np.abs(1.0 - p.W2(n)) == 0
    if np.any(bad2):
        site = int(n[np.argmax(bad2)])
        raise InvalidPotential(f"W2({site}) = 1: the recursion is undefined there", site)


def delta2_bands(spec: OperatorSpec, lam: complex, lo: int, hi: int, *, check=True):
    """Tridiagonal entries of ``Delta2`` on sites ``lo..hi-1``.

    Returns
    -------
    D, U, L : complex arrays of length ``hi - lo``
        ``D[k]`` is the diagonal at site ``lo + k``, ``U[k]`` the entry
        coupling row ``lo + k`` to column ``lo + k + 1`` and ``L[k]`` the
        entry coupling row ``lo + k + 1`` to column ``lo + k``.  Row
        couplings to sites outside the lattice are zero; the diagonal is the
        untruncated one.
    """
    lam = complex(lam)
    n = np.arange(lo, hi)
    p = spec.potential
    if spec.is_jacobi:
        D = 2.0 - lam + p.V1(n).astype(complex)
        U = -np.ones(len(n), dtype=complex)
        L = -np.ones(len(n), dtype=complex)
        if spec.lattice.is_half:
            D = np.where(n == spec.lattice.start, D - 1.0, D)
        return D, U, L
    if check:
        _validity(p, np.arange(spec.lattice.clip(lo - 1), hi))
    m = spec.mass
    w1, w2 = p.W1(n), p.W2(n)
    beta = 1.0 / (lam - m - p.V1(n))
    beta_prev = 1.0 / (lam - m - p.V1(n - 1))
    F = np.abs(1.0 + w1) ** 2 * beta
    Bk = np.abs(1.0 - p.W2(n - 1)) ** 2 * beta_prev
    if spec.lattice.is_half:
        Bk = np.where(n == spec.lattice.start, 0.0, Bk)
    D = F + Bk - (lam + m - p.V2(n))
    U = (1.0 + np.conj(w1)) * (-1.0 + w2) * beta
    L = (-1.0 + np.conj(w2)) * (1.0 + w1) * beta
    return D, U, L


def apply_delta2(spec: OperatorSpec, lam: complex, f: FiniteSequence) -> FiniteSequence:
    """Apply the three-term operator ``Delta2`` at spectral parameter ``lam``.

    In Jacobi mode this is ``Delta + V - lam``.
    """
    _check_support(spec, f.start)
    lo = spec.lattice.clip(f.start - 1)
    hi = f.stop + 1
    D, U, L = delta2_bands(spec, lam, lo - 1, hi + 1, check=not spec.is_jacobi)
    g = f.on(lo - 1, hi + 1)
    out = D[1:-1] * g[1:-1] + U[1:-1] * g[2:] + L[:-2] * g[:-2]
    return FiniteSequence(lo, out)


def apply_delta1(spec: OperatorSpec, lam: complex, f: FiniteSequence) -> FiniteSequence:
    """Apply ``Delta1 = dt (lambda + m - V2)^{-1} dt* - (lambda - m - V1)`` on the full line."""
    if spec.lattice.is_half or spec.is_jacobi:
        raise ValueError("Delta1 is only provided for full-line Dirac specs")
    lam = complex(lam)
    p = spec.potential
    m = spec.mass
    lo, hi = f.start - 1, f.stop + 1
    n = np.arange(lo - 1, hi + 1)
    g = f.on(lo - 2, hi + 1)          # g[i] = f(n[i] - 1), g[i+1] = f(n[i])
    # dt* g on lo-1..hi
    ds = (1.0 + np.conj(p.W1(n))) * g[1:] + (-1.0 + np.conj(p.W2(n - 1))) * g[:-1]
    h = ds / (lam + m - p.V2(n))
    k = n[1:-1]
    out = (1.0 + p.W1(k)) * h[1:-1] + (-1.0 + p.W2(k)) * h[2:] \
        - (lam - m - p.V1(k)) * f.on(lo, hi)
    return FiniteSequence(lo, out)


def apply_U(f: SpinorVector) -> SpinorVector:
    """Charge conjugation ``(f1, f2) -> (i S f2, -i S f1)`` with ``S f(n) = f(-n)``."""
    lo = -(f.stop - 1)
    return SpinorVector(lo, 1j * f.down[::-1], -1j * f.up[::-1])


def shift_potential(p: PotentialPair, j: int) -> PotentialPair:
    """``n -> p(n + j)`` componentwise."""
    return p.shifted(j)


def reflect_potential(p: PotentialPair) -> PotentialPair:
    """``n -> p(-n)`` componentwise."""
    return p.reflected()


def shift_spec(spec: OperatorSpec, j: int) -> OperatorSpec:
    """The operator seen from site ``j``: potentials shifted by ``j``.

    For a half-line spec the lattice start moves to ``start - j`` so the
    shifted operator is unitarily the same.
    """
    lat = spec.lattice
    if lat.is_half:
        lat = HalfLine(lat.start - j)
    return replace(spec, lattice=lat, potential=spec.potential.shifted(j))


def charge_conjugate(spec: OperatorSpec) -> OperatorSpec:
    """Spec ``H'`` with ``U H U = -H'``.

    ``V' = (-S V2, -S V1)`` and ``W' = (S conj(W1), tau S conj(W2))``.
    """
    if spec.lattice.is_half:
        raise ValueError("charge conjugation needs a full-line spec")
    if spec.is_jacobi:
        raise ValueError("charge conjugation is defined for Dirac specs only")
    p = spec.potential
    q = PotentialPair(
        V1=p.V2.reflected().scaled(-1),
        V2=p.V1.reflected().scaled(-1),
        W1=p.W1.conjugated().reflected(),
        W2=p.W2.conjugated().reflected().shifted(1),
    )
    return replace(spec, potential=q)


def left_half_spec(spec: OperatorSpec) -> OperatorSpec:
    """Half-line spec on ``Z_0`` describing the full-line operator left of site 0.

    The left block (sites ``<= -1`` with the link to site 0 removed) is
    reflected onto ``Z_0`` by ``n -> -n - 1``.  Its ``Delta2`` matrix equals
    the one of the returned spec, whose potentials are

        V1'(n) = V1(-n-2),  V2'(n) = V2(-n-1),
        W1'(n) = -W2(-n-2), W2'(n) = -W1(-n-2).

    In Jacobi mode the scalar potential becomes ``V(-n-1)``.
    """
    if spec.lattice.is_half:
        raise ValueError("left_half_spec needs a full-line spec")
    p = spec.potential
    if spec.is_jacobi:
        q = PotentialPair(V1=p.V1.reflected().shifted(1))
    else:
        q = PotentialPair(
            V1=p.V1.reflected().shifted(2),
            V2=p.V2.reflected().shifted(1),
            W1=p.W2.reflected().shifted(2).scaled(-1),
            W2=p.W1.reflected().shifted(2).scaled(-1),
        )
    return replace(spec, lattice=HalfLine(0), potential=q)


def recursion_arrays(spec: OperatorSpec, lam: complex, sites: Iterable[int] | np.ndarray):
    """Vectorised :func:`recursion_coeffs` over ``sites``.

    Returns
    -------
    a, b : complex arrays
    c : float array
    """
    lam = complex(lam)
    n = np.asarray(sites, dtype=np.int64)
    p = spec.potential
    if spec.is_jacobi:
        a = lam - p.V1(n)
        return (np.asarray(a, dtype=complex), np.ones(len(n), dtype=complex),
                np.ones(len(n)))
    w1 = p.W1(n)
    w2 = p.W2(n)
    den = np.abs(1.0 + w1) ** 2
    if np.any(den == 0):
        site = int(n[np.argmax(den == 0)])
        raise InvalidPotential(f"W1({site}) = -1: the recursion is undefined there", site)
    num = np.abs(1.0 - w2) ** 2
    if np.any(num == 0):
        site = int(n[np.argmax(num == 0)])
        raise InvalidPotential(f"W2({site}) = 1: the recursion is undefined there", site)
    m = spec.mass
    a = lam + m - p.V2(n)
    b = (lam - m - p.V1(n)) / den
    c = num / den
    return (np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
            np.asarray(c, dtype=float))


def recursion_coeffs(spec: OperatorSpec, lam: complex, n: int) -> MoebiusCoeffs:
    """Coefficients ``(a_n, b_n, c_n)`` of the map ``Phi_n`` with ``alpha_n = Phi_n(alpha_{n+1})``.

    Dirac mode: ``a_n = lam + m - V2(n)``, ``b_n = (lam - m - V1(n)) / |1 + W1(n)|^2``,
    ``c_n = |1 - W2(n)|^2 / |1 + W1(n)|^2``.  Jacobi mode: ``(lam - V(n), 1, 1)``.

    Raises
    ------
    InvalidPotential
        If ``W1(n) = -1`` or ``W2(n) = 1``.
    """
    a, b, c = recursion_arrays(spec, lam, [n])
    return MoebiusCoeffs(a[0], b[0], c[0])


def free_band_edges(m: float = 0.0, mode: str = DIRAC) -> tuple:
    """Band edges of the free operator.

    ``(-sqrt(m^2+4), -m, m, sqrt(m^2+4))`` for Dirac, ``(0, 4)`` for Jacobi.
    """
    if mode == JACOBI:
        return (0.0, 4.0)
    if m < 0:
        raise ValueError("mass must be non-negative")
    r = math.sqrt(m * m + 4.0)
    return (-r, -float(m), float(m), r)
