"""Geometry of the Poincare upper half-plane and its Moebius contractions.

Points are plain Python ``complex`` numbers; functions that need a point of
the open half-plane validate it with :func:`as_half_plane_point`.  The maps

    phi_{a,b,c}(z) = -(a - (b + c z)^{-1})^{-1},   Im a, Im b >= 0, c > 0,

send the half-plane into itself and shrink the hyperbolic distance.  A
composition of such maps is carried as a :class:`Homography`, the projective
coefficient block of ``z -> -(A + B z) / (C + D z)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DenominatorVanishes, NoHalfPlaneFixedPoint, NotInHalfPlane

__all__ = [
    "MoebiusCoeffs",
    "Homography",
    "IDENTITY",
    "as_half_plane_point",
    "hyp_dist",
    "hyp_dist_upper",
    "moebius_apply",
    "contraction_factor",
    "diameter_bound",
    "dist_to_i_bound",
    "homography_of",
    "homography_compose",
    "homography_apply",
    "homography_fixed_point",
    "points_close",
]

# |C + D z| below this is treated as a pole
POLE_THRESHOLD = 1e-300
# a fixed point whose imaginary part is below this (relative) is treated as real
FIXED_POINT_IM_TOL = 1e-14


def as_half_plane_point(z, *, closed=False) -> complex:
    """Return ``z`` as a complex number after checking it lies in the half-plane.

    Parameters
    ----------
    z : complex
    closed : bool
        Accept ``Im z == 0`` (closed half-plane) when true.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NotInHalfPlane(f"non-finite point {z!r}")
    if z.imag < 0 or (z.imag == 0 and not closed):
        kind = "closed" if closed else "open"
        raise NotInHalfPlane(f"{z!r} is not in the {kind} upper half-plane")
    return z


def points_close(z1, z2, atol=1e-12) -> bool:
    """Equality of half-plane points up to an absolute tolerance."""
    return abs(complex(z1) - complex(z2)) <= atol


def hyp_dist(z1, z2) -> float:
    """Hyperbolic distance ``arccosh(1 + |z1-z2|^2 / (2 Im z1 Im z2))``.

    Evaluated as ``2 asinh(|z1-z2| / (2 sqrt(Im z1 Im z2)))``, which is the same
    number without the cancellation of ``arccosh`` near 1.
    """
    z1 = as_half_plane_point(z1)
    z2 = as_half_plane_point(z2)
    return 2.0 * math.asinh(abs(z1 - z2) / (2.0 * math.sqrt(z1.imag * z2.imag)))


def hyp_dist_upper(z1, z2) -> float:
    """Euclidean upper bound ``|z1-z2| / sqrt(Im z1 Im z2)`` on :func:`hyp_dist`."""
    z1 = as_half_plane_point(z1)
    z2 = as_half_plane_point(z2)
    return abs(z1 - z2) / math.sqrt(z1.imag * z2.imag)


@dataclass(frozen=True)
class MoebiusCoeffs:
    """Coefficients ``(a, b, c)`` of ``phi_{a,b,c}``.

    ``a`` and ``b`` live in the closed upper half-plane and ``c`` is positive.
    Real ``a`` or ``b`` are allowed; the map is then a contraction but not a
    strict one.
    """

    a: complex
    b: complex
    c: float

    def __post_init__(self):
        object.__setattr__(self, "a", as_half_plane_point(self.a, closed=True))
        object.__setattr__(self, "b", as_half_plane_point(self.b, closed=True))
        c = float(self.c)
        if not (c > 0 and math.isfinite(c)):
            raise ValueError(f"c must be a positive real, got {self.c!r}")
        object.__setattr__(self, "c", c)

    @property
    def is_open(self) -> bool:
        return self.a.imag > 0 and self.b.imag > 0

    def __call__(self, z) -> complex:
        return moebius_apply(self, z)


def moebius_apply(phi: MoebiusCoeffs, z) -> complex:
    """Evaluate ``phi_{a,b,c}(z) = -(a - (b + c z)^{-1})^{-1}``."""
    z = as_half_plane_point(z)
    inner = phi.b + phi.c * z
    if abs(inner) < POLE_THRESHOLD:
        raise DenominatorVanishes("b + c z vanishes")
    outer = phi.a - 1.0 / inner
    if abs(outer) < POLE_THRESHOLD:
        raise DenominatorVanishes("a - (b + c z)^-1 vanishes")
    return -1.0 / outer


def contraction_factor(phi: MoebiusCoeffs) -> float:
    """Lipschitz constant ``1 / (1 + Im a Im b)`` for the hyperbolic metric."""
    return 1.0 / (1.0 + phi.a.imag * phi.b.imag)


def diameter_bound(phi: MoebiusCoeffs) -> float:
    """Bound ``(1 + Im b |a|)^2 / (Im b Im a)^2`` on the hyperbolic diameter of the image.

    Raises
    ------
    NotInHalfPlane
        If ``a`` or ``b`` is real; the image is then unbounded.
    """
    if not phi.is_open:
        raise NotInHalfPlane("diameter bound needs Im a > 0 and Im b > 0")
    ia, ib = phi.a.imag, phi.b.imag
    return (1.0 + ib * abs(phi.a)) ** 2 / (ib * ia) ** 2


def dist_to_i_bound(phi: MoebiusCoeffs, z) -> float:
    """Upper bound on ``hyp_dist(phi(z), i)`` in terms of ``|a|, |b|, c, z``."""
    z = as_half_plane_point(z)
    s = abs(phi.b) + phi.c * abs(z)
    cy = phi.c * z.imag
    return (s * s / cy + 1.0) * s * (abs(phi.a) + 1.0 / cy) / math.sqrt(cy)


@dataclass(frozen=True)
class Homography:
    """Projective block ``(A, B, C, D)`` of ``z -> -(A + B z) / (C + D z)``.

    Rescaling all four coefficients by the same non-zero number gives the
    same map.
    """

    A: complex
    B: complex
    C: complex
    D: complex

    def __post_init__(self):
        vals = [complex(v) for v in (self.A, self.B, self.C, self.D)]
        if all(v == 0 for v in vals):
            raise ValueError("homography coefficients cannot all vanish")
        for name, v in zip("ABCD", vals):
            object.__setattr__(self, name, v)

    @property
    def coeffs(self) -> tuple[complex, complex, complex, complex]:
        return (self.A, self.B, self.C, self.D)

    def normalized(self) -> "Homography":
        """Divide by the largest coefficient magnitude."""
        s = max(abs(v) for v in self.coeffs)
        return Homography(self.A / s, self.B / s, self.C / s, self.D / s)

    def projectively_equal(self, other: "Homography", rtol=1e-12) -> bool:
        """True when ``other`` is a scalar multiple of ``self``."""
        u = self.coeffs
        v = other.coeffs
        k = max(range(4), key=lambda i: abs(u[i]))
        if v[k] == 0:
            return False
        ratio = u[k] / v[k]
        scale = max(abs(x) for x in u)
        return all(abs(x - ratio * y) <= rtol * scale for x, y in zip(u, v))

    def __call__(self, z) -> complex:
        return homography_apply(self, z)


IDENTITY = Homography(0.0, 1.0, -1.0, 0.0)


def homography_of(phi: MoebiusCoeffs) -> Homography:
    """Coefficients ``(b, c, ab - 1, ac)`` representing ``phi_{a,b,c}``."""
    a, b, c = phi.a, phi.b, phi.c
    return Homography(b, c, a * b - 1.0, a * c)


def _compose(outer, inner):
    A, B, C, D = outer
    A1, B1, C1, D1 = inner
    return (
        A * C1 - B * A1,
        A * D1 - B * B1,
        C * C1 - D * A1,
        C * D1 - D * B1,
    )


def homography_compose(outer: Homography, inner: Homography) -> Homography:
    """Coefficients of ``outer o inner``, rescaled so the largest has modulus 1."""
    A, B, C, D = _compose(outer.coeffs, inner.coeffs)
    s = max(abs(A), abs(B), abs(C), abs(D))
    if s == 0 or not math.isfinite(s):
        raise DenominatorVanishes("degenerate composition")
    return Homography(A / s, B / s, C / s, D / s)


def homography_apply(h: Homography, z) -> complex:
    """Evaluate ``-(A + B z) / (C + D z)``."""
    z = complex(z)
    den = h.C + h.D * z
    if abs(den) < POLE_THRESHOLD * max(abs(h.C), abs(h.D), 1.0):
        raise DenominatorVanishes("C + D z vanishes")
    return -(h.A + h.B * z) / den


def _quadratic_roots(h: Homography):
    """Roots of ``D z^2 + (B + C) z + A = 0`` without cancellation."""
    A, B, C, D = h.coeffs
    p = B + C
    scale = max(abs(A), abs(p), abs(D))
    if abs(D) <= 1e-15 * scale:
        if p == 0:
            return []
        return [-A / p]
    s = cmath.sqrt(p * p - 4.0 * A * D)
    if (p.conjugate() * s).real < 0:
        s = -s
    q = -0.5 * (p + s)
    if q == 0:
        return [0j, 0j]
    return [q / D, A / q]


def homography_fixed_point(h: Homography) -> complex:
    """Fixed point of ``h`` in the open upper half-plane.

    The fixed-point equation ``z = -(A + B z)/(C + D z)`` is the quadratic
    ``D z^2 + (B + C) z + A = 0``; the root with the larger imaginary part is
    returned when that part is positive.

    Raises
    ------
    NoHalfPlaneFixedPoint
        If no root lies strictly above the real axis.
    """
    roots = _quadratic_roots(h)
    if not roots:
        raise NoHalfPlaneFixedPoint("homography has no finite fixed point")
    z = max(roots, key=lambda r: r.imag)
    if not (z.imag > FIXED_POINT_IM_TOL * max(1.0, abs(z))):
        raise NoHalfPlaneFixedPoint(f"fixed points {roots} are not in the open half-plane")
    return z
