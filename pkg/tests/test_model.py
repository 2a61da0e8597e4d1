import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diamondchain import (
    LatticeState,
    ModelError,
    ModelParams,
    bloch_operator,
    build_cls,
    ClsSpec,
    characteristic_coefficients,
    parity_matrix,
    pt_check,
    real_space_operator,
)
from diamondchain.model import peierls_trig

finite = st.floats(-3, 3, allow_nan=False)


def charpoly_minors(M):
    """Coefficients of det(lam I - M) = lam^3 + c2 lam^2 + c1 lam + c0 by trace/minor expansion."""
    c2 = -np.trace(M)
    c1 = (
        M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    )
    c0 = -np.linalg.det(M)
    return c2, c1, c0


class TestParams:
    def test_defaults(self):
        p = ModelParams()
        assert (p.n_min, p.n_max, p.n_cells, p.dim) == (-150, 150, 301, 903)
        assert p.gamma == p.e_par == p.e_perp == p.phi == 0

    def test_phi_normalized(self):
        assert ModelParams(phi=-math.pi / 2).phi == pytest.approx(3 * math.pi / 2)
        assert ModelParams(phi=2 * math.pi).phi == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": -0.1},
            {"gamma": math.nan},
            {"e_par": math.inf},
            {"n_min": 3, "n_max": 2},
            {"boundary": "periodic"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ModelError):
            ModelParams(**kwargs)

    def test_with_revalidates(self):
        with pytest.raises(ModelError):
            ModelParams().with_(gamma=-1)


class TestLatticeState:
    def test_vector_layout_interleaved(self):
        p = ModelParams(n_min=0, n_max=1)
        s = LatticeState.zeros(p)
        s.cell(1)[2] = 5
        assert np.flatnonzero(s.vector()).tolist() == [5]

    def test_mismatch_rejected(self):
        s = LatticeState.zeros(ModelParams(n_min=0, n_max=3))
        with pytest.raises(ModelError):
            s.check_matches(ModelParams(n_min=0, n_max=4))


class TestBlochOperator:
    def test_rejects_tilt(self):
        with pytest.raises(ModelError):
            bloch_operator(ModelParams(e_par=0.1), 0.0)

    def test_rejects_nonfinite_k(self):
        with pytest.raises(ModelError):
            bloch_operator(ModelParams(), math.nan)

    def test_traceless(self):
        M = bloch_operator(ModelParams(gamma=0.3, e_perp=0.07, phi=1.1), 0.4)
        assert abs(np.trace(M)) < 1e-15

    def test_charpoly_matches_coefficients(self):
        # random draws; det expansion is independent of the cubic formulas
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(500):
            p = ModelParams(
                gamma=rng.uniform(0, 3), e_perp=rng.uniform(-0.5, 0.5), phi=rng.uniform(0, 2 * np.pi)
            )
            k = rng.uniform(-np.pi, np.pi)
            c2, c1, c0 = charpoly_minors(bloch_operator(p, k))
            P, Q = characteristic_coefficients(p, k)
            worst = max(worst, abs(c2), abs(c1 + P), abs(c0 - Q))
        assert worst < 1e-12

    @pytest.mark.parametrize(
        "gamma, phi, k, expected",
        [
            (0.0, 0.0, 0.0, [0, 2 * math.sqrt(2), -2 * math.sqrt(2)]),
            (0.05, math.pi, 0.0, [0, 0.05j, -0.05j]),
            (0.05, math.pi, math.pi, [0, math.sqrt(8 - 0.0025), -math.sqrt(8 - 0.0025)]),
        ],
    )
    def test_eigenvalue_examples(self, gamma, phi, k, expected):
        ev = np.linalg.eigvals(bloch_operator(ModelParams(gamma=gamma, phi=phi), k))
        key = lambda z: (round(z.real, 9), round(z.imag, 9))
        np.testing.assert_allclose(sorted(ev, key=key), sorted(np.array(expected, complex), key=key), atol=1e-12)

    def test_hermitian_limit_magnitudes(self):
        M = bloch_operator(ModelParams(), 0.0)
        off = [M[0, 1], M[1, 0], M[1, 2], M[2, 1]]
        np.testing.assert_allclose(np.abs(off), 2.0)
        np.testing.assert_array_equal(np.diag(M), 0)


class TestRealSpaceOperator:
    @settings(max_examples=40, deadline=None)
    @given(e_par=finite, e_perp=finite, phi=st.floats(0, 2 * np.pi))
    def test_hermitian_when_lossless(self, e_par, e_perp, phi):
        H = real_space_operator(ModelParams(e_par=e_par, e_perp=e_perp, phi=phi, n_min=-3, n_max=4))
        assert np.max(np.abs(H - H.conj().T)) <= 1e-15

    def test_sparse_matches_dense(self):
        p = ModelParams(gamma=0.2, e_par=0.1, e_perp=0.03, phi=0.7, n_min=-5, n_max=5)
        np.testing.assert_array_equal(real_space_operator(p, sparse=True).toarray(), real_space_operator(p))

    def test_onsite_and_hoppings(self):
        p = ModelParams(gamma=0.2, e_par=0.1, e_perp=0.03, phi=0.7, n_min=2, n_max=3)
        H = real_space_operator(p)
        a, b, c = 3, 4, 5  # cell n = 3
        assert H[a, a] == pytest.approx(0.3 + 0.03 + 0.2j)
        assert H[b, b] == pytest.approx(0.35)
        assert H[c, c] == pytest.approx(0.3 - 0.03 - 0.2j)
        assert H[a, b] == pytest.approx(-np.exp(-0.7j))
        assert H[c, b] == pytest.approx(-np.exp(0.7j))
        assert H[a, 1] == -1 and H[c, 1] == -1  # b of cell 2
        assert H[1, a] == -1 and H[1, c] == -1
        assert H[a, c] == 0

    def test_open_boundary_drops_outer_couplings(self):
        H = real_space_operator(ModelParams(n_min=0, n_max=0))
        assert H.shape == (3, 3)
        assert np.count_nonzero(H) == 4

    def test_two_cell_hermitian_pairs(self):
        ev = np.sort(np.linalg.eigvalsh(real_space_operator(ModelParams(n_min=0, n_max=1))))
        np.testing.assert_allclose(ev, -ev[::-1], atol=1e-12)
        assert np.sum(np.abs(ev) < 1e-12) >= 1

    def test_cls_is_null_vector(self):
        p = ModelParams(gamma=0.05, phi=math.pi)
        psi = build_cls(ClsSpec("two_site_phipi", 1.0, 0), p).vector()
        H = real_space_operator(p, sparse=True)
        assert np.linalg.norm(H @ psi) < 1e-12 * np.linalg.norm(psi)

    def test_tilted_spectrum_size(self):
        H = real_space_operator(ModelParams(gamma=0.05, e_par=0.05, phi=math.pi / 2), sparse=True)
        assert H.shape == (903, 903)

    def test_ring_spectrum_equals_bloch(self):
        # closing the chain into a ring quantizes k = 2 pi m / N exactly
        N = 41
        p = ModelParams(gamma=0.3, phi=math.pi / 3, e_perp=0.02, n_min=0, n_max=N - 1)
        H = real_space_operator(p).astype(complex)
        last_b = 3 * (N - 1) + 1
        for site in (0, 2):
            H[site, last_b] = H[last_b, site] = -1
        ks = np.angle(np.exp(2j * np.pi * np.arange(N) / N))
        bloch = np.concatenate([np.linalg.eigvals(bloch_operator(p, k)) for k in ks])
        ev = np.linalg.eigvals(-H)
        assert max(np.min(np.abs(bloch - e)) for e in ev) < 1e-10

    @staticmethod
    def _distance_to_bloch(p):
        ks = np.linspace(-np.pi, np.pi, 20001)
        curve = np.concatenate([np.linalg.eigvals(bloch_operator(p, k)) for k in ks])
        ev = np.linalg.eigvals(-real_space_operator(p))
        return np.array([np.min(np.abs(curve - e)) for e in ev])

    @pytest.mark.parametrize("phi", [math.pi, math.pi / 2])
    def test_open_chain_bulk_on_bloch_dispersion(self, phi):
        dist = self._distance_to_bloch(ModelParams(gamma=0.05, phi=phi, n_min=-50, n_max=50))
        assert np.sum(dist > 1e-3) <= 4

    def test_open_chain_skin_effect_at_generic_phi(self):
        # away from phi in {0, pi/2, pi, 3pi/2} the open-chain bulk leaves the Bloch curves and
        # does not return under refinement; eigenvectors pile up at the ends
        p = ModelParams(gamma=0.3, phi=math.pi / 3, n_min=0, n_max=100)
        assert np.median(self._distance_to_bloch(p)) > 1e-2
        _, V = np.linalg.eig(-real_space_operator(p))
        rho = (np.abs(V) ** 2).reshape(p.n_cells, 3, -1).sum(axis=1)
        rho /= rho.sum(axis=0)
        assert (rho[:10].sum(axis=0) + rho[-10:].sum(axis=0)).mean() > 0.5


class TestPT:
    def test_parity_is_involution(self):
        P = parity_matrix(ModelParams(n_min=0, n_max=4))
        np.testing.assert_array_equal(P @ P, np.eye(15))

    def test_examples(self):
        assert pt_check(ModelParams(gamma=0.05, e_par=0.1, phi=math.pi)).is_pt_symmetric
        r = pt_check(ModelParams(gamma=0.05, e_perp=0.01, phi=math.pi))
        assert not r.is_pt_symmetric
        assert r.residual == pytest.approx(0.02, abs=1e-15)
        r = pt_check(ModelParams())
        assert r.is_pt_symmetric and r.residual == 0.0

    def test_residual_linear_in_eperp(self):
        base = ModelParams(gamma=0.4, e_par=0.07, phi=1.3, n_min=-10, n_max=10)
        res = [pt_check(base.with_(e_perp=e)).residual for e in (0.0, 0.1, 0.2, 0.4)]
        np.testing.assert_allclose(res, [0.0, 0.2, 0.4, 0.8], atol=1e-15)


def test_peierls_trig_snaps():
    assert peierls_trig(math.pi) == (-1.0, 0.0)
    assert peierls_trig(math.pi / 2) == (0.0, 1.0)
    c, s = peierls_trig(0.3)
    assert (c, s) == (math.cos(0.3), math.sin(0.3))
