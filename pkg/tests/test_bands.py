import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diamondchain import (
    GAMMA_C,
    BandSolverError,
    CharacteristicCoefficients,
    ModelError,
    ModelParams,
    band_sweep,
    characteristic_coefficients,
    classify_gaps,
    solve_cubic,
)
from diamondchain.bands import companion_roots, cubic_residual, cubic_roots, sort_roots, track_bands

# companion-matrix value for gamma = e_perp = 0.05, phi = pi, k = pi (frozen regression constant)
EPERP_K_PI_ROOT = 2.8284272628529665 + 0.0008838834333248191j


def matched_distance(a, b):
    """Largest distance under the best of the six root pairings, row-wise."""
    from itertools import permutations

    best = np.full(a.shape[0], np.inf)
    for perm in permutations(range(3)):
        best = np.minimum(best, np.max(np.abs(a - b[:, perm]), axis=1))
    return best


class TestCoefficients:
    def test_hermitian_k0(self):
        P, Q = characteristic_coefficients(ModelParams(), 0.0)
        assert (P, Q) == (8, 0)

    def test_flat_band_case(self):
        ks = np.linspace(-np.pi, np.pi, 9)
        P, Q = characteristic_coefficients(ModelParams(gamma=0.05, phi=math.pi), ks)
        np.testing.assert_array_equal(Q, 0)
        np.testing.assert_allclose(P, -0.0025 + 4 * (1 - np.cos(ks)), rtol=0, atol=1e-14)

    def test_direct_evaluation(self):
        P, Q = characteristic_coefficients(ModelParams(gamma=0.05, e_perp=0.01, phi=math.pi / 2), math.pi / 2)
        assert abs(Q - 4 * (0.01 + 0.05j)) < 1e-14
        assert abs(P - (0.0001 + 0.001j - 0.0025 + 4)) < 1e-14

    def test_rejects_tilt(self):
        with pytest.raises(ModelError):
            characteristic_coefficients(ModelParams(e_par=0.05), 0.0)


class TestSolveCubic:
    def test_simple(self):
        r = solve_cubic(CharacteristicCoefficients(1, 0))
        np.testing.assert_allclose(r.roots, [-1, 0, 1], atol=1e-15)
        assert not r.degenerate

    def test_flat_band_k_pi(self):
        P = -0.0025 + 8
        r = solve_cubic(CharacteristicCoefficients(P, 0))
        np.testing.assert_allclose(r.roots, [-math.sqrt(7.9975), 0, math.sqrt(7.9975)], atol=1e-14)

    def test_eperp_regression(self):
        g = e = 0.05
        P = e**2 + 2j * g * e - g**2 + 8
        r = solve_cubic(CharacteristicCoefficients(P, 0))
        np.testing.assert_allclose(r.roots, [-EPERP_K_PI_ROOT, 0, EPERP_K_PI_ROOT], atol=1e-14)

    def test_degenerate_triple_root(self):
        r = solve_cubic(CharacteristicCoefficients(0, 0))
        assert r.degenerate
        np.testing.assert_array_equal(r.roots, 0)

    def test_sorted_by_real_then_imag(self):
        r = solve_cubic(CharacteristicCoefficients(-0.0025, 0)).roots  # {0, +-0.05i}
        np.testing.assert_allclose(r, [-0.05j, 0, 0.05j], atol=1e-15)

    def test_cardano_vs_companion_random(self):
        rng = np.random.default_rng(7)
        n = 10_000
        # mixture of scales, including near-degenerate coefficient pairs
        scale = 10.0 ** rng.uniform(-6, 2, size=(n, 2))
        p = (rng.normal(size=n) + 1j * rng.normal(size=n)) * scale[:, 0]
        q = (rng.normal(size=n) + 1j * rng.normal(size=n)) * scale[:, 1]
        cardano = cubic_roots(p, q).roots
        companion = companion_roots(p, q)
        mag = np.maximum(1.0, np.max(np.abs(companion), axis=1))
        assert np.max(matched_distance(cardano, companion) / mag) < 1e-9

    @settings(max_examples=200, deadline=None)
    @given(
        pr=st.floats(-20, 20), pi_=st.floats(-20, 20), qr=st.floats(-20, 20), qi=st.floats(-20, 20)
    )
    def test_vieta(self, pr, pi_, qr, qi):
        P, Q = complex(pr, pi_), complex(qr, qi)
        r = solve_cubic(CharacteristicCoefficients(P, Q)).roots
        scale = max(1.0, np.max(np.abs(r)))
        assert abs(r.sum()) < 1e-12 * scale
        e2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2]
        assert abs(e2 + P) <= 1e-10 * max(1.0, abs(P))
        assert abs(r.prod() + Q) <= 1e-10 * max(1.0, abs(Q))
        assert np.all(cubic_residual(r, P, Q) < 1e-10 * np.maximum(1.0, np.abs(r) ** 3))


class TestTracking:
    def test_untangles_swapped_labels(self):
        k = np.linspace(0, 1, 50)
        true = np.stack([k, -k + 0.5, 2 + 0j * k], axis=1).astype(complex)
        shuffled = np.array([sort_roots(row) for row in true])
        out = track_bands(shuffled)
        for j in range(3):
            assert np.max(np.abs(np.diff(out[:, j]))) < 0.05


class TestBandSweep:
    def test_grid(self):
        s = band_sweep(ModelParams(gamma=0.1, phi=1.0), 64)
        assert s.grid[0] == -np.pi and s.grid[-1] == np.pi
        assert np.all(np.diff(s.grid) > 0)
        assert s.lambdas.shape == (64, 3)

    def test_requires_enough_points(self):
        with pytest.raises(ModelError):
            band_sweep(ModelParams(), 8)

    def test_rejects_tilt(self):
        with pytest.raises(ModelError):
            band_sweep(ModelParams(e_par=0.1))

    def test_cross_check_recorded(self):
        s = band_sweep(ModelParams(gamma=0.7, e_perp=0.03, phi=2.0))
        assert s.max_eig_deviation < 1e-9

    def test_flat_band_phi_pi(self):
        g = 0.05
        s = band_sweep(ModelParams(gamma=g, phi=math.pi))
        lam = s.lambdas
        flat = np.abs(lam).min(axis=1)
        assert flat.max() < 1e-12
        kstar = math.acos(1 - g**2 / 4)
        disp_im = np.sort(np.abs(lam.imag), axis=1)[:, 1:]
        complex_k = np.abs(s.grid[np.any(disp_im > 1e-9, axis=1)])
        real_k = np.abs(s.grid[np.all(disp_im <= 1e-9, axis=1)])
        assert complex_k.max() < kstar < real_k.min()

    def test_hermitian_phi0(self):
        s = band_sweep(ModelParams(), 401)
        expected = np.sqrt(4 * (1 + np.cos(s.grid)))
        np.testing.assert_allclose(np.abs(s.lambdas.imag), 0, atol=1e-12)
        got = np.sort(s.lambdas.real, axis=1)
        np.testing.assert_allclose(got[:, 2], expected, atol=1e-7)
        np.testing.assert_allclose(got[:, 0], -expected, atol=1e-7)

    def test_phi_half_pi_structure(self):
        s = band_sweep(ModelParams(gamma=0.05, phi=math.pi / 2))
        lam = s.bands
        assert np.all(np.abs(lam.imag).max(axis=0) > 1e-6)  # all three complex somewhere
        # real parts nearly k-independent (the gain/loss adds only an O(gamma^2) ripple)
        assert np.all(np.ptp(lam.real, axis=0) < 1e-3)
        # two bands carry the same Im profile, and every profile is odd in k
        im = lam.imag
        pairs = [(i, j) for i in range(3) for j in range(i + 1, 3)]
        assert min(np.max(np.abs(im[:, i] - im[:, j])) for i, j in pairs) < 1e-12
        np.testing.assert_allclose(im, -im[::-1], atol=1e-12)

    def test_vieta_on_sweep(self):
        p = ModelParams(gamma=1.3, e_perp=0.2, phi=0.9)
        s = band_sweep(p, 101)
        P, Q = characteristic_coefficients(p, s.grid)
        lam = s.lambdas
        np.testing.assert_allclose(lam.sum(axis=1), 0, atol=1e-12)
        e2 = lam[:, 0] * lam[:, 1] + lam[:, 0] * lam[:, 2] + lam[:, 1] * lam[:, 2]
        np.testing.assert_allclose(e2, -P, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(lam.prod(axis=1), -Q, rtol=1e-10, atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(gamma=st.floats(0.01, 3), phi=st.floats(0, 2 * math.pi))
    def test_never_fully_real_with_gain(self, gamma, phi):
        s = band_sweep(ModelParams(gamma=gamma, phi=phi), 64)
        assert np.max(np.abs(s.lambdas.imag)) > 0

    def test_flat_band_iff_q_zero(self):
        for phi, flat in [(0.0, True), (math.pi, True), (math.pi / 2, False), (1.0, False)]:
            p = ModelParams(gamma=0.2, phi=phi)
            Q = characteristic_coefficients(p, np.linspace(-np.pi, np.pi, 33)).q
            assert bool(np.all(Q == 0)) is flat
            assert classify_gaps(band_sweep(p, 128)).has_flat_band is flat


class TestClassifyGaps:
    @pytest.mark.parametrize(
        "gamma, e_perp, gapless",
        [(0.05, 0.0, True), (3.0, 0.0, False), (0.05, 0.05, False)],
    )
    def test_phi_pi_examples(self, gamma, e_perp, gapless):
        r = classify_gaps(band_sweep(ModelParams(gamma=gamma, e_perp=e_perp, phi=math.pi)))
        assert r.has_flat_band
        assert r.is_gapless is gapless
        assert r.gamma_c == GAMMA_C
        assert r.is_gapless == (r.min_separation < r.separation_tolerance)

    def test_min_separation_not_above_grid(self):
        r = classify_gaps(band_sweep(ModelParams(gamma=0.5, phi=math.pi)))
        assert r.min_separation <= r.grid_min_separation

    def test_touching_points_reported(self):
        g = 0.05
        r = classify_gaps(band_sweep(ModelParams(gamma=g, phi=math.pi)))
        assert r.touching_points
        # the dispersive pair meets the flat band at the exceptional point 4(1 - cos k*) = gamma^2
        kstar = math.acos(1 - g**2 / 4)
        assert kstar == pytest.approx(0.0353571, abs=1e-7)
        assert all(t.separation < 1e-6 for t in r.touching_points)
        assert all(abs(abs(t.k) - kstar) < 1e-6 for t in r.touching_points)

    def test_gapped_isolated_phi_half_pi(self):
        r = classify_gaps(band_sweep(ModelParams(gamma=0.05, phi=math.pi / 2)))
        assert not r.has_flat_band and not r.is_gapless
        assert r.min_separation > 1.0

    def test_hermitian_touching_at_zone_edge(self):
        r = classify_gaps(band_sweep(ModelParams()))
        assert r.is_gapless
        assert any(abs(abs(t.k) - math.pi) < 1e-6 for t in r.touching_points)
