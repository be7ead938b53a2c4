"""Tests for central moments, Hu invariants and Zernike magnitudes.

Invariance claims are checked against independently computed references:
a direct floating-point moment summation, closed-form moments of solid
rectangles, and closed-form radial polynomials.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordbn.moments import (
    DEFAULT_ZERNIKE_INDICES,
    CentralMoments,
    EmptyInkError,
    central_moments,
    feature_vector,
    hu_invariants,
    zernike_moments,
    zernike_radial,
)


def _random_blob(seed: int, h: int = 48, w: int = 64) -> np.ndarray:
    """Union of a few random rectangles; always has ink."""
    rng = np.random.default_rng(seed)
    img = np.zeros((h, w), dtype=bool)
    for _ in range(rng.integers(2, 5)):
        y0 = int(rng.integers(0, h - 8))
        x0 = int(rng.integers(0, w - 8))
        img[y0 : y0 + int(rng.integers(4, 12)), x0 : x0 + int(rng.integers(4, 12))] = True
    return img


def _moments_reference(mask: np.ndarray) -> dict:
    """Direct float summation of central moments (independent route)."""
    ys, xs = np.nonzero(mask)
    cx, cy = xs.mean(), ys.mean()
    out = {}
    for p in range(4):
        for q in range(4 - p):
            out[p, q] = float(np.sum((xs - cx) ** p * (ys - cy) ** q))
    return out


class TestCentralMoments:
    """Exact-arithmetic central moments."""

    def test_matches_float_reference(self):
        for seed in range(10):
            img = _random_blob(seed)
            m = central_moments(img)
            ref = _moments_reference(img)
            for (p, q), want in ref.items():
                got = m.get(p, q)
                assert got == pytest.approx(want, rel=1e-9, abs=1e-6)

    def test_first_order_moments_are_exactly_zero(self):
        for seed in range(10):
            m = central_moments(_random_blob(seed))
            assert m.v10 == 0.0
            assert m.v01 == 0.0

    def test_zeroth_moment_counts_ink(self):
        img = _random_blob(3)
        assert central_moments(img).v00 == float(img.sum())

    def test_rectangle_closed_form(self):
        # solid w x h rectangle: v20 = w*h*(w^2-1)/12, v02 = w*h*(h^2-1)/12
        img = np.zeros((30, 40), dtype=bool)
        img[5:17, 8:29] = True  # h=12, w=21
        m = central_moments(img)
        assert m.v20 == pytest.approx(21 * 12 * (21**2 - 1) / 12, rel=1e-12)
        assert m.v02 == pytest.approx(21 * 12 * (12**2 - 1) / 12, rel=1e-12)
        assert m.v11 == pytest.approx(0.0, abs=1e-9)
        assert m.v30 == pytest.approx(0.0, abs=1e-6)

    def test_grayscale_input_uses_ink_mask(self):
        gray = np.full((10, 10), 255, dtype=np.uint8)
        gray[2:5, 3:9] = 0
        binary = gray < 128
        assert central_moments(gray) == central_moments(binary)

    def test_empty_image_rejected(self):
        with pytest.raises(EmptyInkError):
            central_moments(np.zeros((5, 5), dtype=bool))


class TestHuInvariants:
    """Seven invariants and their symmetry properties."""

    def test_rectangle_first_invariant_closed_form(self):
        # phi1 = ((w^2-1) + (h^2-1)) / (12*w*h) for a solid rectangle
        img = np.zeros((40, 50), dtype=bool)
        img[4:22, 6:37] = True  # h=18, w=31
        phi = hu_invariants(central_moments(img))
        want = ((31**2 - 1) + (18**2 - 1)) / (12 * 31 * 18)
        assert phi[0] == pytest.approx(want, rel=1e-12)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_translation_is_bit_exact(self, seed):
        img = _random_blob(seed)
        shifted = np.zeros((img.shape[0] + 13, img.shape[1] + 29), dtype=bool)
        shifted[13:, 29:] = img
        a = hu_invariants(central_moments(img))
        b = hu_invariants(central_moments(shifted))
        assert np.array_equal(a, b)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_mirror_flips_only_the_seventh_sign(self, seed):
        img = _random_blob(seed)
        a = hu_invariants(central_moments(img))
        b = hu_invariants(central_moments(img[:, ::-1]))
        assert np.array_equal(a[:6], b[:6])
        assert a[6] == -b[6]

    def test_quarter_rotation_within_tolerance(self):
        for seed in range(8):
            img = _random_blob(seed)
            a = hu_invariants(central_moments(img))
            b = hu_invariants(central_moments(np.rot90(img)))
            np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-12)

    def test_upscaling_approximate_invariance(self):
        img = _random_blob(7)
        a = hu_invariants(central_moments(img))
        b = hu_invariants(central_moments(np.kron(img, np.ones((3, 3), dtype=bool))))
        np.testing.assert_allclose(a[:4], b[:4], rtol=2e-2)

    def test_nonpositive_mass_rejected(self):
        bad = CentralMoments(0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="zeroth"):
            hu_invariants(bad)


class TestZernikeRadial:
    """Radial polynomial values and index validation."""

    def test_low_order_closed_forms(self):
        r = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(zernike_radial(1, 1, r), r, atol=1e-12)
        np.testing.assert_allclose(zernike_radial(2, 0, r), 2 * r**2 - 1, atol=1e-12)
        np.testing.assert_allclose(zernike_radial(2, 2, r), r**2, atol=1e-12)
        np.testing.assert_allclose(zernike_radial(3, 1, r), 3 * r**3 - 2 * r, atol=1e-12)
        np.testing.assert_allclose(zernike_radial(3, 3, r), r**3, atol=1e-12)

    def test_value_at_unit_radius_is_one(self):
        for m in range(7):
            for n in range(m % 2, m + 1, 2):
                assert zernike_radial(m, n, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_negative_repetition_matches_positive(self):
        r = np.linspace(0.0, 1.0, 7)
        np.testing.assert_array_equal(zernike_radial(3, -1, r), zernike_radial(3, 1, r))

    def test_invalid_pairs_rejected(self):
        for m, n in [(2, 1), (1, 2), (-1, 1), (3, 2)]:
            with pytest.raises(ValueError, match="index|order"):
                zernike_radial(m, n, 0.5)


class TestZernikeMoments:
    """Normalized magnitudes on the image-centered unit disk."""

    def test_quarter_rotation_invariance(self):
        for seed in range(6):
            img = _random_blob(seed, h=50, w=50)
            a = zernike_moments(img)
            b = zernike_moments(np.rot90(img))
            np.testing.assert_allclose(a, b, atol=1e-9)

    def test_full_disk_higher_orders_vanish(self):
        # ink covering the whole unit disk: every (m, n) != (0, 0) integrates
        # an orthogonal basis function against a constant
        n = 201
        yy, xx = np.mgrid[0:n, 0:n]
        c = (n - 1) / 2
        disk = (xx - c) ** 2 + (yy - c) ** 2 <= 90.0**2
        mags = zernike_moments(disk, radius=90.0)
        np.testing.assert_allclose(mags, 0.0, atol=5e-3)

    def test_centered_disk_first_harmonic_smaller_than_offset(self):
        n = 101
        yy, xx = np.mgrid[0:n, 0:n]
        centered = (xx - 50) ** 2 + (yy - 50) ** 2 <= 100
        offset = (xx - 75) ** 2 + (yy - 50) ** 2 <= 100
        a = zernike_moments(centered)[0]
        b = zernike_moments(offset)[0]
        assert a < 1e-6
        assert b > 10 * max(a, 1e-9)

    def test_default_disk_covers_corners(self):
        img = np.zeros((20, 30), dtype=bool)
        img[0, 0] = True
        mags = zernike_moments(img)
        assert np.isfinite(mags).all()

    def test_explicit_radius_can_exclude_ink(self):
        img = np.zeros((21, 21), dtype=bool)
        img[0, 0] = True
        with pytest.raises(EmptyInkError):
            zernike_moments(img, radius=3.0)

    def test_empty_image_rejected(self):
        with pytest.raises(EmptyInkError):
            zernike_moments(np.zeros((9, 9), dtype=bool))


class TestFeatureVector:
    """12-component descriptor layout."""

    def test_concatenates_hu_then_zernike(self):
        img = _random_blob(12)
        fv = feature_vector(img)
        assert fv.shape == (12,)
        np.testing.assert_array_equal(fv[:7], hu_invariants(central_moments(img)))
        np.testing.assert_array_equal(fv[7:], zernike_moments(img, DEFAULT_ZERNIKE_INDICES))

    def test_custom_indices_change_tail_length(self):
        img = _random_blob(1)
        fv = feature_vector(img, zernike_indices=((1, 1), (2, 2)))
        assert fv.shape == (9,)
