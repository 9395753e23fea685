"""Green functions by the hyperbolic contraction recursion.

On the half-line ``Z_n`` the diagonal Green function ``alpha_n`` of
``Delta2`` obeys ``alpha_n = Phi_n(alpha_{n+1})`` with
``Phi_n = phi_{a_n, b_n, c_n}``.  Composing ``Phi_n o ... o Phi_{n+d-1}`` and
applying the composite to a seed converges to ``alpha_n`` for every seed in
the half-plane; the fixed point of the next ``nu`` maps is a much better seed
when the potential is asymptotically ``nu``-periodic.

Full-line values are glued from a right and a left half-line, and general
resolvent entries of ``H`` come from a window of the inverse of the
tridiagonal ``Delta2`` built from the same half-line values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .errors import (
    DenominatorVanishes,
    InvalidPotential,
    MaxDepthExceeded,
    NoHalfPlaneFixedPoint,
    NotInHalfPlane,
    UnstableMarch,
)
from .halfplane import (
    IDENTITY,
    Homography,
    MoebiusCoeffs,
    homography_apply,
    homography_compose,
    homography_fixed_point,
    homography_of,
    hyp_dist,
)
from .model import (
    HalfLine,
    OperatorSpec,
    SpinorVector,
    charge_conjugate,
    delta2_bands,
    left_half_spec,
    recursion_arrays,
    recursion_coeffs,
    shift_spec,
)

log = logging.getLogger(__name__)

__all__ = [
    "SeedStrategy",
    "GreenResult",
    "half_line_green",
    "periodic_seed",
    "glue_full_line",
    "diagonal_green",
    "green_window",
    "resolvent_entry",
    "propagate_solution",
    "contraction_bound",
    "a_priori_constants",
]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_DEPTH = 1_000_000
MAX_CHUNK = 1 << 16
MARCH_LIMIT = 1e12


@dataclass(frozen=True)
class SeedStrategy:
    """Where the composite map is evaluated.

    ``kind="imaginary_unit"`` always uses ``i``; ``kind="periodic"`` uses the
    half-plane fixed point of the next ``nu`` maps and falls back to ``i``
    wherever that fixed point does not exist.
    """

    kind: str = "periodic"
    nu: int | None = None

    def __post_init__(self):
        if self.kind not in ("imaginary_unit", "periodic"):
            raise ValueError(f"unknown seed kind {self.kind!r}")
        if self.nu is not None and int(self.nu) < 1:
            raise ValueError("seed period must be >= 1")

    @classmethod
    def imaginary_unit(cls) -> "SeedStrategy":
        return cls("imaginary_unit")

    @classmethod
    def periodic(cls, nu: int | None = None) -> "SeedStrategy":
        return cls("periodic", nu)

    def resolve(self, spec: OperatorSpec) -> "SeedStrategy":
        if self.kind == "periodic" and self.nu is None:
            return SeedStrategy("periodic", spec.nu)
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "nu": self.nu}


@dataclass(frozen=True)
class GreenResult:
    """Outcome of a Green-function recursion.

    Attributes
    ----------
    value : complex
        The Green function, ``Im value > 0``.
    depth : int
        Number of maps composed.
    residual : float
        Hyperbolic distance between the last two evaluations (``nan`` when
        the a-priori bound stopped the recursion before a second evaluation).
    error_bound : float or None
        A-priori tail bound when a uniform contraction factor is available.
    seed_used : SeedStrategy
    stop_reason : str
        ``"residual"`` or ``"a_priori_bound"``.
    seed_failures : int
        Evaluations where the periodic seed had no half-plane fixed point.
    """

    value: complex
    depth: int
    residual: float
    error_bound: float | None
    seed_used: SeedStrategy
    stop_reason: str = "residual"
    seed_failures: int = 0

    def to_dict(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "depth": self.depth,
            "residual": self.residual,
            "error_bound": self.error_bound,
            "seed": self.seed_used.to_dict(),
            "stop_reason": self.stop_reason,
            "seed_failures": self.seed_failures,
        }


def _upper(lam) -> complex:
    lam = complex(lam)
    if not lam.imag > 0:
        raise NotInHalfPlane(f"spectral parameter {lam!r} must have Im > 0")
    return lam


def contraction_bound(spec: OperatorSpec, lam) -> float | None:
    """Uniform per-map contraction factor ``1 / (1 + (Im lam)^2 (1 + ||W1||)^-2)``.

    ``None`` in Jacobi mode, where ``Im b_n = 0`` gives no uniform factor.
    """
    if spec.is_jacobi:
        return None
    y = complex(lam).imag
    w = spec.potential.W1.sup
    return 1.0 / (1.0 + y * y / (1.0 + w) ** 2)


def a_priori_constants(spec: OperatorSpec, lam):
    """``(delta, eta)``: contraction factor and image-diameter bound of every ``Phi_n``.

    The distance between the depth-``k`` evaluation and the limit is at most
    ``eta * delta^k / (1 - delta)``.  Returns ``None`` in Jacobi mode.
    """
    delta = contraction_bound(spec, lam)
    if delta is None:
        return None
    lam = complex(lam)
    y = lam.imag
    p = spec.potential
    eta = ((1.0 + p.W1.sup) ** 2 + y * (abs(lam) + spec.mass + p.V2.sup)) ** 2 / y ** 4
    return delta, eta


def _bound_depth(spec, lam, tol):
    consts = a_priori_constants(spec, lam)
    if consts is None:
        return None
    delta, eta = consts
    if delta >= 1.0:
        return None
    k = math.log(tol * (1.0 - delta) / eta) / math.log(delta)
    if not math.isfinite(k) or k > 1e15:
        return None
    return max(1, int(math.ceil(k)))


def _fp_seed(a, b, c, lo, nu):
    """Periodic seed from coefficient arrays (``None`` when it does not exist)."""
    h = IDENTITY
    for j in range(lo, lo + nu):
        h = homography_compose(h, homography_of(MoebiusCoeffs(a[j], b[j], c[j])))
    try:
        return homography_fixed_point(h)
    except NoHalfPlaneFixedPoint:
        return None


def half_line_green(spec: OperatorSpec, lam, n: int | None = None, *, tol: float = DEFAULT_TOL,
                    max_depth: int = DEFAULT_MAX_DEPTH, seed: SeedStrategy | None = None,
                    check_every: int | None = None, use_bound: bool = True,
                    backend=None) -> GreenResult:
    """Diagonal Green function ``alpha_n`` of ``Delta2`` restricted to ``Z_n``.

    Parameters
    ----------
    spec : OperatorSpec
        Half-line or full-line; only the potentials at sites ``>= n`` matter.
    lam : complex
        Spectral parameter with ``Im lam > 0``.
    n : int, optional
        First site; defaults to the start of a half-line spec (0 on the full line).
    tol : float
        Hyperbolic-residual tolerance between consecutive evaluations.
    max_depth : int
    seed : SeedStrategy, optional
        Default: periodic with the spec's ``nu``.
    check_every : int, optional
        Evaluation spacing; default the smallest multiple of ``nu`` that is
        at least 64.
    use_bound : bool
        Also stop once the a-priori tail bound (Dirac mode) is below ``tol``.
    backend : module, optional
        Kernel module; default from :func:`dirac_green._backend.get_backend`.

    Raises
    ------
    MaxDepthExceeded
        The residual did not drop below ``tol`` within ``max_depth`` maps.
    InvalidPotential
        ``W1 = -1`` or ``W2 = 1`` at a site reached by the recursion.
    """
    lam = _upper(lam)
    if tol <= 0 or max_depth < 1:
        raise ValueError("tol and max_depth must be positive")
    if n is None:
        n = spec.lattice.start if spec.lattice.is_half else 0
    if spec.lattice.is_half and n < spec.lattice.start:
        raise ValueError(f"site {n} is left of the half-line start {spec.lattice.start}")
    seed = (seed or SeedStrategy.periodic()).resolve(spec)
    periodic = seed.kind == "periodic"
    nu = seed.nu if periodic else 1
    if check_every is None:
        check_every = nu * -(-64 // nu)
    kern = backend or _backend.get_backend()
    k_bound = _bound_depth(spec, lam, tol) if use_bound else None
    stop = max_depth if k_bound is None else min(max_depth, k_bound)

    state = np.array([0, 1, -1, 0], dtype=complex)
    prev, have_prev = 0j, False
    depth = 0
    fails = 0
    residual = float("nan")
    chunk = 2 * check_every
    while depth < stop:
        steps = min(chunk, stop - depth)
        sites = np.arange(n + depth, n + depth + steps + nu)
        a, b, c = recursion_arrays(spec, lam, sites)
        done, conv, value, res, prev, have_prev, f = kern.fold_chunk(
            a, b, c, steps, nu, check_every, depth, periodic, tol, state, prev, have_prev)
        depth += done
        fails += f
        if res == -2.0:
            raise NotInHalfPlane(f"composite left the half-plane at depth {depth}")
        if res >= 0:
            residual = res
        if conv:
            return GreenResult(complex(value), depth, residual,
                               _err_bound(spec, lam, depth), seed, "residual", fails)
        if depth >= stop:
            z = _fp_seed(a, b, c, done, nu) if periodic else None
            if z is None:
                z = 1j
                fails += periodic
            value = homography_apply(Homography(*state), z)
            if have_prev and depth % check_every and value.imag > 0:
                residual = hyp_dist(value, prev)
            if not value.imag > 0:
                raise NotInHalfPlane(f"composite left the half-plane at depth {depth}")
            if k_bound is not None and depth >= k_bound:
                return GreenResult(complex(value), depth, residual,
                                   _err_bound(spec, lam, depth), seed, "a_priori_bound", fails)
            raise MaxDepthExceeded(complex(value), residual, depth)
        chunk = min(2 * chunk, MAX_CHUNK)
    raise MaxDepthExceeded(complex(prev), residual, depth)  # pragma: no cover


def _err_bound(spec, lam, depth):
    consts = a_priori_constants(spec, lam)
    if consts is None:
        return None
    delta, eta = consts
    if delta >= 1.0:
        return None
    return eta * delta ** depth / (1.0 - delta)


def periodic_seed(spec: OperatorSpec, lam, n: int, nu: int | None = None) -> complex:
    """Half-plane fixed point of ``Phi_n o ... o Phi_{n+nu-1}``.

    ``lam`` may be real (inside a band) as long as the composite has a fixed
    point with positive imaginary part.

    Raises
    ------
    NoHalfPlaneFixedPoint
    """
    nu = spec.nu if nu is None else int(nu)
    h = IDENTITY
    for k in range(n, n + nu):
        h = homography_compose(h, homography_of(recursion_coeffs(spec, lam, k)))
    return homography_fixed_point(h)


def _merge(r1: GreenResult, r2: GreenResult, value) -> GreenResult:
    eb = None
    if r1.error_bound is not None and r2.error_bound is not None:
        eb = r1.error_bound + r2.error_bound
    res = max(r1.residual, r2.residual) if not (math.isnan(r1.residual) or math.isnan(r2.residual)) \
        else float("nan")
    reason = r1.stop_reason if r1.stop_reason == r2.stop_reason else "mixed"
    return GreenResult(complex(value), max(r1.depth, r2.depth), res, eb, r1.seed_used,
                       reason, r1.seed_failures + r2.seed_failures)


def _glue_coeffs(spec: OperatorSpec, lam):
    """``(a, b, c, b', c')`` at site 0 of a full-line spec."""
    p = spec.potential
    if spec.is_jacobi:
        return lam - complex(p.V1.at(0)), 1.0, 1.0, 1.0, 1.0
    a, b, c = recursion_arrays(spec, lam, [0])
    w1, w2 = p.W1.at(-1), p.W2.at(-1)
    den = abs(1.0 - w2) ** 2
    if den == 0:
        raise InvalidPotential("W2(-1) = 1: the glued value is undefined", -1)
    b2 = (lam - spec.mass - p.V1.at(-1).real) / den
    c2 = abs(1.0 + w1) ** 2 / den
    if c2 == 0:
        raise InvalidPotential("W1(-1) = -1: the glued value is undefined", -1)
    return a[0], b[0], c[0], b2, c2


def glue_full_line(spec: OperatorSpec, lam, site: int = 0, **opts) -> GreenResult:
    """Diagonal Green function of the full-line ``Delta2`` at ``site``.

    The right half ``Z_{site+1}`` and the left half (reflected onto ``Z_0``
    by :func:`dirac_green.model.left_half_spec`) are computed separately and
    combined as ``-(a - (b + c alpha)^-1 - (b' + c' alpha')^-1)^-1``.

    Keyword options are passed to :func:`half_line_green`.
    """
    if spec.lattice.is_half:
        raise ValueError("glue_full_line needs a full-line spec")
    lam = _upper(lam)
    s = shift_spec(spec, site) if site else spec
    right = half_line_green(s.with_lattice(HalfLine(0)), lam, 1, **opts)
    left = half_line_green(left_half_spec(s), lam, 0, **opts)
    a, b, c, b2, c2 = _glue_coeffs(s, lam)
    inner = b + c * right.value
    inner2 = b2 + c2 * left.value
    if inner == 0 or inner2 == 0:
        raise DenominatorVanishes("glue denominators vanish")
    outer = a - 1.0 / inner - 1.0 / inner2
    if outer == 0:
        raise DenominatorVanishes("glue denominator vanishes")
    value = -1.0 / outer
    if not value.imag > 0:
        raise NotInHalfPlane(f"glued value {value!r} is not in the half-plane")
    return _merge(right, left, value)


def diagonal_green(spec: OperatorSpec, lam, site: int | None = None, spin: str = "down",
                   **opts) -> GreenResult:
    """Diagonal resolvent entry as a :class:`GreenResult`.

    Spin-down entries at the first site of a half-line are ``alpha_n``
    directly; on the full line they are glued; spin-up full-line entries go
    through charge conjugation.  Other cases fall back to
    :func:`resolvent_entry` and carry no depth information.
    """
    lat = spec.lattice
    if site is None:
        site = lat.start if lat.is_half else 0
    if spec.is_jacobi or spin == "down":
        if lat.is_half and site == lat.start:
            return half_line_green(spec, lam, site, **opts)
        if not lat.is_half:
            return glue_full_line(spec, lam, site, **opts)
    elif not lat.is_half:
        lam = _upper(lam)
        conj = charge_conjugate(spec)
        r = glue_full_line(conj, -complex(lam).conjugate(), -site, **opts)
        return replace(r, value=-r.value.conjugate())
    value = resolvent_entry(spec, lam, (site, spin), (site, spin), **opts)
    return GreenResult(complex(value), 0, float("nan"), None,
                       (opts.get("seed") or SeedStrategy.periodic()).resolve(spec), "window")


def _alpha_chain(spec, lam, lo, hi, opts):
    """``alpha_k`` for ``k = lo..hi`` (half-line Green of ``Z_k``)."""
    deep = half_line_green(spec, lam, hi, **opts).value
    a, b, c = recursion_arrays(spec, lam, np.arange(lo, hi))
    out = np.empty(hi - lo + 1, dtype=complex)
    out[-1] = deep
    z = deep
    for k in range(hi - lo - 1, -1, -1):
        z = -1.0 / (a[k] - 1.0 / (b[k] + c[k] * z))
        out[k] = z
    return out


def green_window(spec: OperatorSpec, lam, lo: int, hi: int, **opts) -> np.ndarray:
    """Block ``G[i - lo, j - lo] = <delta_i, Delta2^{-1} delta_j>`` for ``lo <= i, j <= hi``.

    Uses right ratios from the half-line values ``alpha_k`` and left ratios
    from either the reflected left half-line (full line) or a forward sweep
    from the first site (half-line).  Both sweeps run in their stable
    directions.
    """
    lam = _upper(lam)
    lat = spec.lattice
    if lat.is_half and lo < lat.start:
        raise ValueError("window starts left of the half-line")
    if hi < lo:
        raise ValueError("empty window")
    size = hi - lo + 1
    # bands on lo-1 .. hi+1
    D, U, L = delta2_bands(spec, lam, lo - 1, hi + 2)
    a, b, c = recursion_arrays(spec, lam, np.arange(lo - 1, hi + 2)) if not spec.is_jacobi \
        else (None, np.ones(size + 2, dtype=complex), np.ones(size + 2))
    F = 1.0 / b                                   # F_k, k = lo-1..hi+1
    Bk = np.empty(size + 2, dtype=complex)        # Bk_k, k = lo-1..hi+1
    Bk[1:] = c[:-1] / b[:-1]
    Bk[0] = recursion_bk(spec, lam, lo - 1)
    if lat.is_half:
        Bk[np.arange(lo - 1, hi + 2) == lat.start] = 0.0
    # right: r_k for k = lo+1 .. hi+1
    alpha = _alpha_chain(spec, lam, lo + 1, hi + 1, opts)
    r = 1.0 / (1.0 / alpha + Bk[2:])
    # left: ell_k for k = lo-1 .. hi-1  (ell[0] is site lo-1)
    ell = np.zeros(size + 1, dtype=complex)
    if lat.is_half:
        if lo > lat.start:
            ell[0] = _forward_left(spec, lam, lat.start, lo - 1)
    else:
        alt = half_line_green(left_half_spec(shift_spec(spec, lo)), lam, 0, **opts).value
        ell[0] = 1.0 / (1.0 / alt + F[0])
    for t in range(1, size + 1):
        # site lo-1+t, band index t
        ell[t] = 1.0 / (D[t] - L[t - 1] * U[t - 1] * ell[t - 1])
    G = np.empty((size, size), dtype=complex)
    for j in range(size):
        t = j + 1                                  # band index of site lo+j
        G[j, j] = 1.0 / (D[t] - U[t] * L[t] * r[j] - L[t - 1] * U[t - 1] * ell[j])
        for i in range(j + 1, size):
            # G[i, j] = G[i-1, j] * (-r_{i} L_{i-1})
            G[i, j] = G[i - 1, j] * (-r[i - 1] * L[i])
        for i in range(j - 1, -1, -1):
            # G[i, j] = G[i+1, j] * (-ell_i U_i)
            G[i, j] = G[i + 1, j] * (-ell[i + 1] * U[i + 1])
    return G


def recursion_bk(spec, lam, k):
    """Backward diagonal contribution ``|1 - W2(k-1)|^2 / (lam - m - V1(k-1))`` (1 in Jacobi mode)."""
    if spec.is_jacobi:
        return 1.0
    if spec.lattice.is_half and k == spec.lattice.start:
        return 0.0
    a, b, c = recursion_arrays(spec, lam, [k - 1])
    return c[0] / b[0]


def _forward_left(spec, lam, start, j):
    """Green function at ``j`` of ``Delta2`` restricted to ``start..j``."""
    D, U, L = delta2_bands(spec, lam, start, j + 1)
    ell = 1.0 / D[0]
    for t in range(1, j - start + 1):
        ell = 1.0 / (D[t] - L[t - 1] * U[t - 1] * ell)
    return ell


def _beta(spec, lam, i):
    return 1.0 / (lam - spec.mass - spec.potential.V1.at(i).real)


def resolvent_entry(spec: OperatorSpec, lam, source, target, **opts) -> complex:
    """``<target, (H - lam)^{-1} source>`` for basis spinors ``(site, spin)``.

    In Jacobi mode the spins are ignored and the entry is that of
    ``(Delta + V - lam)^{-1}``.  ``Im lam < 0`` is handled by the Hermitian
    symmetry ``G(s, t)(lam) = conj(G(t, s)(conj lam))``.

    Keyword options are passed to :func:`half_line_green`.
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise NotInHalfPlane("resolvent entries need Im lam != 0")
    if lam.imag < 0:
        return resolvent_entry(spec, lam.conjugate(), target, source, **opts).conjugate()
    (j, sspin), (i, tspin) = source, target
    j, i = int(j), int(i)
    lat = spec.lattice
    if lat.is_half and min(i, j) < lat.start:
        raise ValueError("site outside the half-line")
    if spec.is_jacobi:
        lo, hi = min(i, j), max(i, j)
        G = green_window(spec, lam, lo, hi, **opts)
        return complex(G[i - lo, j - lo])
    for s in (sspin, tspin):
        if s not in ("up", "down"):
            raise ValueError(f"spin must be 'up' or 'down', got {s!r}")
    if i == j and sspin == tspin:
        if not lat.is_half:
            return diagonal_green(spec, lam, i, sspin, **opts).value
        if sspin == "down" and i == lat.start:
            return half_line_green(spec, lam, i, **opts).value
    lo, hi = min(i, j), max(i, j) + 1
    G = green_window(spec, lam, lo, hi, **opts)
    p = spec.potential

    def g(x, y):
        return G[x - lo, y - lo]

    def f2(x):
        """Spin-down component at ``x`` of the column for the source."""
        if sspin == "down":
            return g(x, j)
        w1, w2 = p.W1.at(j), p.W2.at(j)
        return _beta(spec, lam, j) * ((1.0 + w1.conjugate()) * g(x, j)
                                      + (-1.0 + w2.conjugate()) * g(x, j + 1))

    if tspin == "down":
        return complex(f2(i))
    if sspin == "down":
        w1, w2 = p.W1.at(i), p.W2.at(i)
        return complex(_beta(spec, lam, i) * ((1.0 + w1) * g(i, j) + (-1.0 + w2) * g(i + 1, j)))
    # spin-up to spin-up: the window already holds row i + 1
    w1, w2 = p.W1.at(i), p.W2.at(i)
    val = (1.0 + w1) * f2(i) + (-1.0 + w2) * f2(i + 1) - (1.0 if i == j else 0.0)
    return complex(_beta(spec, lam, i) * val)


def propagate_solution(spec: OperatorSpec, lam, f2_at_0, N: int, *, cap: bool = True) -> SpinorVector:
    """March the coupled first-order system upward from the boundary datum.

    With ``f2(start) = f2_at_0`` the first site's spin-down row fixes
    ``f1(start)``; spin-up rows then give ``f2(n+1)`` and spin-down rows
    ``f1(n+1)``.  The result solves ``(H - lam) f = (0,1) delta_start`` on the
    spin-down row of the first site and on every row strictly inside the
    range, so it is the resolvent column when ``f2_at_0`` is the exact
    diagonal value.  The march amplifies any error by the growing solution;
    with ``cap`` the depth is limited to ``10 * ceil(1 / Im lam)``.

    Raises
    ------
    UnstableMarch
        When a component exceeds ``1e12`` in modulus.
    """
    if not spec.lattice.is_half or spec.is_jacobi:
        raise ValueError("propagate_solution needs a half-line Dirac spec")
    lam = complex(lam)
    if lam.imag == 0:
        raise NotInHalfPlane("propagate_solution needs Im lam != 0")
    if cap:
        N = min(int(N), 10 * math.ceil(1.0 / abs(lam.imag)))
    N = int(N)
    k0 = spec.lattice.start
    n = np.arange(k0, k0 + N + 1)
    p = spec.potential
    m = spec.mass
    V1, V2, W1, W2 = p.V1(n), p.V2(n), p.W1(n), p.W2(n)
    if np.any(np.abs(1.0 + W1) == 0) or np.any(np.abs(-1.0 + W2[:-1]) == 0):
        raise InvalidPotential("march needs W1 != -1 and W2 != 1")
    f1 = np.zeros(N + 1, dtype=complex)
    f2 = np.zeros(N + 1, dtype=complex)
    f2[0] = complex(f2_at_0)
    f1[0] = (1.0 - (-m + V2[0] - lam) * f2[0]) / (1.0 + np.conj(W1[0]))
    for t in range(N):
        f2[t + 1] = -((m + V1[t] - lam) * f1[t] + (1.0 + W1[t]) * f2[t]) / (-1.0 + W2[t])
        f1[t + 1] = -((-1.0 + np.conj(W2[t])) * f1[t] + (-m + V2[t + 1] - lam) * f2[t + 1]) \
            / (1.0 + np.conj(W1[t + 1]))
        if max(abs(f1[t + 1]), abs(f2[t + 1])) > MARCH_LIMIT:
            raise UnstableMarch(f"solution exceeded {MARCH_LIMIT:g} at site {k0 + t + 1}")
    return SpinorVector(k0, f1, f2)
