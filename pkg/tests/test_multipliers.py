import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotflow import multipliers as mult
from rotflow import oracle
from rotflow.cli import _bandlimited_scalar, safe_band_limit
from rotflow.profiles import SIGN_TRIPLES, SignTriple
from rotflow.spectral import Grid, SpectralField, semigroup, transform, inverse_transform

from conftest import random_scalar

PPP = SignTriple(+1, +1, +1)


def triples_st():
    return st.sampled_from(SIGN_TRIPLES)


def freq_st():
    c = st.floats(-4, 4)
    return st.tuples(c, c, c)


def _ok(xi, eta):
    xi, eta = np.asarray(xi), np.asarray(eta)
    d = xi - eta
    return all(
        np.hypot(z[0], z[1]) > 1e-2 and np.linalg.norm(z) > 1e-2
        for z in (xi, eta, d)
    )


class TestPhaseSigma:
    def test_phase_hand_values(self):
        assert mult.phase((0, 0, 2), (0, 0, 1), PPP) == pytest.approx(1.0)
        # all horizontal: Lambda = 0 everywhere
        assert mult.phase((1, 2, 0), (3, -1, 0), PPP) == 0.0
        v = mult.phase((1.0, 0.4, 1.3), (0.2, 1.0, -0.4), PPP)
        w = mult.phase((1.0, 0.4, 1.3), (0.2, 1.0, -0.4), SignTriple(-1, -1, -1))
        assert v == pytest.approx(-w)

    def test_phase_range(self, rng):
        xi, eta = mult.random_samples(rng, 2000)
        for signs in SIGN_TRIPLES:
            v = mult.phase(xi.T, eta.T, signs)
            assert np.all(np.abs(v) <= 3.0 + 1e-12)

    def test_sigma_bar_values(self):
        assert np.allclose(mult.sigma_bar((1, 0, 1), (0, 1, 0)), [0, 1])
        assert np.allclose(mult.sigma_bar((2, 4, 1), (1, 2, 0.5)), [0, 0])
        assert np.allclose(mult.sigma_bar((1.1, -2, 0.3), (1.1, -2, 0.3)), [0, 0])


class TestPointValues:
    def test_m1_vanishing_factor(self):
        v = mult.m1((1, 0, 0), (0, 1, 0), PPP)
        assert abs(v) < 1e-15

    def test_m2_hand_value(self):
        v = mult.m2((1, 0, 0), (0, 1, 0), SignTriple(+1, -1, +1))
        assert v == pytest.approx(-1.0 / (2.0 * np.sqrt(2.0)))
        v = mult.m2((1, 0, 0), (0, 1, 0), SignTriple(-1, -1, +1))
        assert v == pytest.approx(+1.0 / (2.0 * np.sqrt(2.0)))

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError, match="_h"):
            mult.m1((0, 0, 1), (0, 1, 0), PPP)
        with pytest.raises(ValueError):
            mult.MultiplierSample((0, 0, 1), (0, 1, 0), PPP)

    def test_sample_type(self):
        s = mult.MultiplierSample((1, 0, 0.5), (0, 1, 0.2), PPP)
        assert s.signs is PPP


class TestEnergyStructure:
    @given(freq_st(), freq_st(), triples_st())
    @settings(max_examples=120, deadline=None)
    def test_antisymmetry(self, xi, eta, signs):
        if not _ok(xi, eta):
            return
        swapped = SignTriple(signs.mu2, signs.mu1, signs.mu)
        for fn in (mult.m1, mult.m2, mult.m3):
            a = fn(xi, eta, signs)
            b = fn(eta, xi, swapped)
            assert abs(a + np.conj(b)) < 1e-12

    def test_w_symmetry_and_forms(self, rng):
        xi, eta = mult.random_samples(rng, 5000)
        X, E = xi.T, eta.T
        assert np.max(np.abs(mult.w_weight(X, E) - mult.w_weight(E, X))) < 1e-12
        assert np.max(np.abs(mult.w_weight(X, E, 1) - mult.w_weight(X, E, 2))) < 1e-12

    def test_homogeneity(self, rng):
        xi, eta = mult.random_samples(rng, 1000)
        X, E = xi.T, eta.T
        for signs in SIGN_TRIPLES:
            a = mult.m_total(3.0 * X, 3.0 * E, signs)
            b = 3.0 * mult.m_total(X, E, signs)
            assert np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)) < 1e-12


class TestNullForms:
    @given(freq_st(), freq_st(), st.sampled_from([s for s in SIGN_TRIPLES if s.mu1 == s.mu2]))
    @settings(max_examples=120, deadline=None)
    def test_factored_matches_unfactored(self, xi, eta, signs):
        if not _ok(xi, eta):
            return
        for which in (1, 2):
            a = mult.m_sym(xi, eta, signs, which)
            b = mult.m_sym_factored(xi, eta, signs, which)
            assert abs(a - b) < 1e-12

    def test_needs_equal_input_signs(self):
        with pytest.raises(ValueError, match="mu1 = mu2"):
            mult.m_sym((1, 0, 0.5), (0, 1, 0.2), SignTriple(+1, +1, -1), 1)

    def test_vanishes_on_equal_moduli(self):
        xi, eta = (2.0, 0.0, 0.0), (1.0, 1.0, 0.0)
        # |eta_h| = sqrt(2), |(xi-eta)_h| = sqrt(2)
        for which in (1, 2):
            assert abs(mult.m_sym(xi, eta, PPP, which)) < 1e-14

    def test_vanishes_on_resonant_set(self, rng):
        xi, eta = mult.resonant_set_samples(rng, 3000)
        for signs in (PPP, SignTriple(-1, -1, -1)):
            for which in (1, 2):
                v = mult.m_sym(xi.T, eta.T, signs, which)
                assert np.max(np.abs(v)) < 1e-12


class TestVectorFieldIdentities:
    def test_hand_value_s_eta_lambda(self):
        # closed form at xi=(1,0,1), eta=(0,1,0): (xi-eta)_h . sigma / |xi-eta|^3
        recs = mult.vf_identity_residuals((1, 0, 1), (0, 1, 0), h=1e-4)
        by_name = {r["name"]: r for r in recs}
        assert by_name["S_eta_Lambda"]["residuals"][0] < 1e-8

    def test_residual_order(self, rng):
        xi, eta = mult.random_samples(rng, 5)
        agg = {}
        for i in range(5):
            for r in mult.vf_identity_residuals(xi[i], eta[i], h=1e-2):
                acc = agg.setdefault(r["name"], {"res": np.zeros(3), "exact": r["exact"]})
                acc["res"] += np.asarray(r["residuals"])
        for name, acc in agg.items():
            res = acc["res"] / 5
            if acc["exact"]:
                assert res[0] < 1e-10, name
            else:
                assert res[0] / res[1] == pytest.approx(4.0, rel=0.2), name
                assert res[1] / res[2] == pytest.approx(4.0, rel=0.2), name


class TestBilinearFactored:
    def test_identity_plan_is_product(self, grid16, rng):
        G1 = random_scalar(grid16, rng, axis_free=True, band=4)
        G2 = random_scalar(grid16, rng, axis_free=True, band=4)
        t = 0.9
        signs = SignTriple(+1, -1, +1)
        out = mult.bilinear_factored(G1, G2, signs, t, plan="identity")
        u = inverse_transform(semigroup(G1, t, signs.mu1))
        v = inverse_transform(semigroup(G2, t, signs.mu2))
        direct = semigroup(transform(grid16, u * v), t, -signs.mu)
        mask = ~np.broadcast_to(grid16.axis_mask, grid16.shape)
        gap = np.abs(out.coeffs - direct.coeffs)[mask].max()
        assert gap < 1e-12 * np.abs(direct.coeffs).max()

    def test_identity_plan_vs_direct_sum(self, grid8, rng):
        G1 = random_scalar(grid8, rng, axis_free=True, band=2)
        G2 = random_scalar(grid8, rng, axis_free=True, band=2)
        t = 1.3
        signs = SignTriple(-1, +1, -1)
        fast = mult.bilinear_factored(G1, G2, signs, t, plan="identity")
        slow = oracle.bilinear_direct(G1, G2, lambda x, e: 1.0 + 0j, signs, t)
        mask = np.broadcast_to(grid8.dealias_mask & ~grid8.axis_mask, grid8.shape)
        gap = np.abs((fast - slow).coeffs)[mask].max()
        assert gap < 1e-11 * max(np.abs(slow.coeffs).max(), 1e-30)

    @pytest.mark.parametrize("which", ["m1", "m2", "m3", "total"])
    def test_plans_vs_direct_oracle(self, grid8, rng, which):
        G1 = random_scalar(grid8, rng, axis_free=True, band=2)
        G2 = random_scalar(grid8, rng, axis_free=True, band=2)
        t = 0.6
        fn = {"m1": mult.m1, "m2": mult.m2, "m3": mult.m3, "total": mult.m_total}[which]
        for signs in (PPP, SignTriple(-1, +1, -1)):
            fast = mult.bilinear_factored(G1, G2, signs, t, plan=which)
            slow = oracle.bilinear_direct(
                G1, G2, lambda x, e: fn(x, e, signs, strict=False), signs, t
            )
            mask = np.broadcast_to(grid8.dealias_mask & ~grid8.axis_mask, grid8.shape)
            num = np.linalg.norm((fast - slow).coeffs[mask])
            den = np.linalg.norm(slow.coeffs[mask])
            assert num / den < 1e-10

    def test_axis_modes_rejected(self, grid16, rng):
        c = np.zeros(grid16.shape, dtype=complex)
        c[0, 0, 1] = 1.0
        bad = SpectralField(grid16, c)
        good = random_scalar(grid16, rng, axis_free=True)
        with pytest.raises(ValueError, match="axis"):
            mult.bilinear_factored(bad, good, PPP, 0.0)

    def test_zero_input(self, grid16, rng):
        G1 = random_scalar(grid16, rng, axis_free=True)
        z = SpectralField.zeros(grid16)
        out = mult.bilinear_factored(G1, z, PPP, 0.3)
        assert out.l2_norm() == 0.0


class TestNonlinearityConsistency:
    def test_zero_trivial(self, grid8):
        z = SpectralField.zeros(grid8)
        assert mult.nonlinearity_consistency(z, z, PPP, 0.0) == 0.0

    @pytest.mark.parametrize("use_oracle", [True, False])
    def test_random_inputs_all_triples(self, use_oracle, rng):
        g = Grid(8, 1.0)
        B = safe_band_limit(8)
        G1 = _bandlimited_scalar(g, rng, B)
        G2 = _bandlimited_scalar(g, rng, B)
        for signs in SIGN_TRIPLES:
            r = mult.nonlinearity_consistency(G1, G2, signs, 0.8, use_oracle=use_oracle)
            assert r < 1e-9, signs

    def test_chi_h_supported_inputs(self, rng):
        from rotflow.localization import project

        g = Grid(12, 1.0)
        B = safe_band_limit(12)
        G1 = project(_bandlimited_scalar(g, rng, B), "h")
        G2 = project(_bandlimited_scalar(g, rng, B), "h")
        for signs in (PPP, SignTriple(+1, -1, -1)):
            assert mult.nonlinearity_consistency(G1, G2, signs, 1.1) < 1e-9

    def test_beltrami_derived_inputs(self, rng):
        from rotflow.profiles import r_pm
        from rotflow.spectral import helical_split
        from conftest import random_divfree

        g = Grid(12, 1.0)
        u = random_divfree(g, rng, band=safe_band_limit(12))
        up, um = helical_split(u)
        G1 = r_pm(up, +1)
        G2 = r_pm(um, -1)
        signs = SignTriple(+1, +1, -1)
        assert mult.nonlinearity_consistency(G1, G2, signs, 0.5) < 1e-9


class TestSampling:
    def test_random_samples_stay_off_singular_sets(self, rng):
        xi, eta = mult.random_samples(rng, 5000)
        d = xi - eta
        for z in (xi, eta, d):
            assert np.min(np.hypot(z[:, 0], z[:, 1])) >= 1e-3
        assert np.all(np.abs(xi) <= 4.0) and np.all(np.abs(eta) <= 4.0)

    def test_resonant_samples_on_set(self, rng):
        xi, eta = mult.resonant_set_samples(rng, 2000)
        assert np.max(np.abs(eta[:, 2])) == 0.0
        assert np.max(np.abs(xi[:, 2])) == 0.0
        d = xi - eta
        r1 = np.hypot(eta[:, 0], eta[:, 1])
        r2 = np.hypot(d[:, 0], d[:, 1])
        assert np.max(np.abs(r1 - r2)) < 1e-12 * np.max(r1)
