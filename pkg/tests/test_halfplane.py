import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dirac_green.errors import DenominatorVanishes, NoHalfPlaneFixedPoint, NotInHalfPlane
from dirac_green.halfplane import (
    IDENTITY,
    Homography,
    MoebiusCoeffs,
    as_half_plane_point,
    contraction_factor,
    diameter_bound,
    dist_to_i_bound,
    homography_apply,
    homography_compose,
    homography_fixed_point,
    homography_of,
    hyp_dist,
    hyp_dist_upper,
    moebius_apply,
)

from conftest import GOLDEN

reals = st.floats(-5, 5, allow_nan=False)
pos = st.floats(1e-2, 5, allow_nan=False)
upper = st.builds(complex, reals, pos)
closed = st.builds(complex, reals, st.one_of(st.just(0.0), pos))
coeffs = st.builds(MoebiusCoeffs, closed, closed, st.floats(0.05, 5))
open_coeffs = st.builds(MoebiusCoeffs, upper, upper, st.floats(0.05, 5))


def acosh_dist(z1, z2):
    return math.acosh(1 + abs(z1 - z2) ** 2 / (2 * z1.imag * z2.imag))


class TestDistance:
    def test_examples(self):
        assert hyp_dist(1j, 1j) == 0.0
        assert hyp_dist(1j, 2j) == pytest.approx(math.log(2), abs=1e-15)
        assert hyp_dist(1j, 1 + 1j) == pytest.approx(math.acosh(1.5), abs=1e-15)
        assert hyp_dist(1j, 1 + 1j) == pytest.approx(0.9624236501, abs=1e-9)
        assert hyp_dist_upper(1j, 1j) == 0.0
        assert hyp_dist_upper(1j, 2j) == pytest.approx(1 / math.sqrt(2), abs=1e-15)

    def test_rejects_lower_half_plane(self):
        with pytest.raises(NotInHalfPlane):
            hyp_dist(1.0, 1j)
        with pytest.raises(NotInHalfPlane):
            as_half_plane_point(-1j, closed=True)
        assert as_half_plane_point(2.0, closed=True) == 2.0

    @given(upper, upper)
    def test_matches_arccosh_form(self, z1, z2):
        assert hyp_dist(z1, z2) == pytest.approx(acosh_dist(z1, z2), rel=1e-9, abs=1e-7)

    @given(upper, upper, upper)
    def test_metric_axioms(self, z1, z2, z3):
        d12 = hyp_dist(z1, z2)
        assert d12 >= 0
        assert d12 == hyp_dist(z2, z1)
        assert hyp_dist(z1, z3) <= d12 + hyp_dist(z2, z3) + 1e-10

    @given(upper, upper)
    def test_upper_bound(self, z1, z2):
        assert hyp_dist(z1, z2) <= hyp_dist_upper(z1, z2) + 1e-12


class TestMoebius:
    def test_value_at_i(self):
        phi = MoebiusCoeffs(1j, 1j, 1.0)
        assert abs(moebius_apply(phi, 1j) - 2j / 3) < 1e-15

    def test_a_zero(self):
        # -(0 - (2i)^-1)^-1 = -(i/2)^-1 ... = 2i
        w = moebius_apply(MoebiusCoeffs(0.0, 1j, 1.0), 1j)
        assert w.imag > 0
        assert abs(w - (-1 / (0 - 1 / (2j)))) < 1e-15

    def test_free_fixed_point(self):
        z = 1j * GOLDEN
        assert abs(moebius_apply(MoebiusCoeffs(1j, 1j, 1.0), z) - z) < 1e-15

    def test_rejects_bad_coeffs(self):
        with pytest.raises(ValueError):
            MoebiusCoeffs(1j, 1j, 0.0)
        with pytest.raises(NotInHalfPlane):
            MoebiusCoeffs(-1j, 1j, 1.0)

    def test_factor_examples(self):
        assert contraction_factor(MoebiusCoeffs(1j, 1j, 1)) == 0.5
        assert contraction_factor(MoebiusCoeffs(2.0, 1j, 1)) == 1.0
        assert contraction_factor(MoebiusCoeffs(2j, 0.5j, 1)) == 0.5

    def test_diameter_examples(self):
        assert diameter_bound(MoebiusCoeffs(1j, 1j, 1)) == pytest.approx(4.0)
        assert diameter_bound(MoebiusCoeffs(1j, 2j, 1)) == pytest.approx(2.25)
        with pytest.raises(NotInHalfPlane):
            diameter_bound(MoebiusCoeffs(1.0, 1j, 1))

    def test_dist_to_i_example(self):
        phi = MoebiusCoeffs(1j, 1j, 1)
        assert dist_to_i_bound(phi, 1j) == pytest.approx(20.0)
        d = hyp_dist(moebius_apply(phi, 1j), 1j)
        assert d == pytest.approx(math.log(1.5), abs=1e-15)
        assert d <= 20.0
        assert math.isfinite(dist_to_i_bound(phi, 1e8j))

    @given(coeffs, upper)
    def test_maps_into_half_plane(self, phi, z):
        assume(abs(phi.b + phi.c * z) > 1e-9)
        assume(abs(phi.a - 1 / (phi.b + phi.c * z)) > 1e-9)
        assert moebius_apply(phi, z).imag > 0

    @given(coeffs, upper, upper)
    def test_contraction(self, phi, z1, z2):
        w1, w2 = moebius_apply(phi, z1), moebius_apply(phi, z2)
        assume(w1.imag > 1e-12 and w2.imag > 1e-12)
        d = hyp_dist(z1, z2)
        assert hyp_dist(w1, w2) <= d * (1 + 1e-9) + 1e-12

    @given(open_coeffs, upper, upper)
    def test_strict_contraction_and_diameter(self, phi, z1, z2):
        w1, w2 = moebius_apply(phi, z1), moebius_apply(phi, z2)
        dw = hyp_dist(w1, w2)
        assert dw <= contraction_factor(phi) * hyp_dist(z1, z2) * (1 + 1e-9) + 1e-12
        assert dw <= diameter_bound(phi) + 1e-12

    @given(coeffs, upper)
    def test_dist_to_i_bound(self, phi, z):
        w = moebius_apply(phi, z)
        assume(w.imag > 1e-12)
        assert hyp_dist(w, 1j) <= dist_to_i_bound(phi, z) * (1 + 1e-12)


class TestHomography:
    def test_of_examples(self):
        h = homography_of(MoebiusCoeffs(1j, 1j, 1))
        assert h.coeffs == (1j, 1, -2, 1j)
        assert abs(homography_apply(h, 1j) - 2j / 3) < 1e-15
        g = homography_of(MoebiusCoeffs(0, 0, 1))
        assert g.coeffs == (0, 1, -1, 0)
        assert homography_apply(g, 0.3 + 2j) == 0.3 + 2j
        r = homography_of(MoebiusCoeffs(0.7, 0.7, 1.0))
        assert all(c.imag == 0 for c in r.coeffs)

    def test_identity(self):
        h = homography_of(MoebiusCoeffs(1 + 2j, 0.5j, 3.0))
        assert homography_compose(h, IDENTITY).projectively_equal(h)
        assert homography_compose(IDENTITY, h).projectively_equal(h)
        for z in (1j, 3 - 0.2j, 1e3 + 1e-3j):
            assert homography_apply(IDENTITY, z) == z

    def test_projective_invariance(self):
        h = homography_of(MoebiusCoeffs(1 + 2j, 0.5j, 3.0))
        h2 = Homography(*(2 * c for c in h.coeffs))
        assert abs(homography_apply(h, 0.4 + 1j) - homography_apply(h2, 0.4 + 1j)) < 1e-15
        assert h.projectively_equal(h2)
        assert not h.projectively_equal(IDENTITY)

    def test_square_at_i(self):
        phi = MoebiusCoeffs(1j, 1j, 1)
        h = homography_of(phi)
        hh = homography_compose(h, h)
        assert abs(homography_apply(hh, 1j) - moebius_apply(phi, moebius_apply(phi, 1j))) < 1e-12

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            Homography(0, 0, 0, 0)

    def test_pole(self):
        with pytest.raises(DenominatorVanishes):
            homography_apply(Homography(1, 0, 0, 0), 1j)

    @given(coeffs, upper)
    def test_agrees_with_moebius(self, phi, z):
        try:
            w = moebius_apply(phi, z)
        except DenominatorVanishes:
            return
        assume(abs(w) < 1e8)
        assert abs(homography_apply(homography_of(phi), z) - w) <= 1e-12 * max(1.0, abs(w))

    @given(open_coeffs, open_coeffs, upper)
    def test_composition(self, p1, p2, z):
        h = homography_compose(homography_of(p1), homography_of(p2))
        direct = moebius_apply(p1, moebius_apply(p2, z))
        assert abs(homography_apply(h, z) - direct) <= 1e-10 * max(1.0, abs(direct))
        assert max(abs(c) for c in h.coeffs) == pytest.approx(1.0, abs=1e-15)

    def test_deep_fold_stays_normalised(self, rng):
        h = IDENTITY
        for _ in range(10_000):
            a = complex(rng.normal(), rng.uniform(0.01, 1))
            b = complex(rng.normal(), rng.uniform(0.01, 1))
            h = homography_compose(h, homography_of(MoebiusCoeffs(a, b, rng.uniform(0.2, 2))))
            assert max(abs(c) for c in h.coeffs) == pytest.approx(1.0, abs=1e-15)
        assert all(np.isfinite(c) for c in h.coeffs)
        assert homography_apply(h, 1j).imag > 0


class TestFixedPoint:
    def test_free_dirac_at_i(self):
        z = homography_fixed_point(homography_of(MoebiusCoeffs(1j, 1j, 1)))
        assert abs(z - 1j * GOLDEN) < 1e-15

    def test_free_dirac_real_band(self):
        x = math.sqrt(2)
        z = homography_fixed_point(homography_of(MoebiusCoeffs(x, x, 1)))
        assert abs(z - complex(-x / 2, x / 2)) < 1e-14

    def test_free_laplacian(self):
        z = homography_fixed_point(homography_of(MoebiusCoeffs(2.0, 1.0, 1.0)))
        assert abs(z - (-0.5 + 0.5j)) < 1e-14

    def test_outside_band(self):
        with pytest.raises(NoHalfPlaneFixedPoint):
            homography_fixed_point(homography_of(MoebiusCoeffs(5.0, 5.0, 1)))

    @given(open_coeffs, open_coeffs)
    def test_residual(self, p1, p2):
        h = homography_compose(homography_of(p1), homography_of(p2))
        z = homography_fixed_point(h)
        assert z.imag > 0
        assert abs(homography_apply(h, z) - z) <= 1e-10 * max(1.0, abs(z))

    def test_quadratic_root_oracle(self):
        # D z^2 + (B + C) z + A = 0 solved with the textbook formula
        h = homography_of(MoebiusCoeffs(0.3 + 0.7j, -1 + 0.2j, 1.7))
        A, B, C, D = h.coeffs
        disc = cmath.sqrt((B + C) ** 2 - 4 * A * D)
        roots = [(-(B + C) + disc) / (2 * D), (-(B + C) - disc) / (2 * D)]
        want = max(roots, key=lambda r: r.imag)
        assert abs(homography_fixed_point(h) - want) < 1e-13
