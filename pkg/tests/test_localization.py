import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotflow import multipliers as mult
from rotflow.localization import (
    DEFAULT_BANK,
    TelescopePiece,
    UnresolvableLocalizationWarning,
    WavePacketGeometry,
    active_ring_indices,
    apply_selector,
    project,
    projection_weight,
    ring_localize,
    ring_weight,
    shell_range,
    smoothstep,
    spatial_localize,
    telescope,
    wavepacket_level_grid,
    wavepacket_sets,
    z_partition_range,
    zh_weight,
)
from rotflow.profiles import SignTriple
from rotflow.spectral import Grid, SpectralField, inverse_transform

from conftest import random_scalar

B = DEFAULT_BANK


class TestBumps:
    @given(st.floats(-10, 10))
    @settings(max_examples=200, deadline=None)
    def test_psi_support_rules(self, x):
        v = B.psi(x)
        if abs(x) <= 1.8:
            assert v == 1.0
        if abs(x) >= 2.0:
            assert v == 0.0
        assert 0.0 <= v <= 1.0

    @given(st.floats(-8, 8))
    @settings(max_examples=200, deadline=None)
    def test_ring_support(self, x):
        v = B.ring(x)
        if abs(x) < 0.9 or abs(x) > 2.0:
            assert v == 0.0
        assert -1e-15 <= v <= 1.0

    @given(st.floats(min_value=1e-6, max_value=50).filter(lambda x: x > 0))
    @settings(max_examples=200, deadline=None)
    def test_dyadic_partition_of_unity(self, x):
        lmax = int(np.ceil(np.log2(x))) + 2
        lmin = int(np.floor(np.log2(x))) - 2
        total = sum(B.ring(2.0**-l * x) for l in range(lmin, lmax + 1))
        assert abs(total - 1.0) < 1e-12

    @given(st.floats(-20, 20))
    @settings(max_examples=200, deadline=None)
    def test_translation_partition(self, x):
        j0 = int(np.floor(x))
        total = sum(B.tbump(x - j) for j in range(j0 - 2, j0 + 3))
        assert abs(total - 1.0) < 1e-12

    def test_smoothstep_complement(self):
        s = np.linspace(-1, 2, 301)
        assert np.max(np.abs(smoothstep(s) + smoothstep(1 - s) - 1.0)) < 1e-12

    @given(st.floats(-1.2, 1.2))
    @settings(max_examples=200, deadline=None)
    def test_chi_h_v_partition_and_supports(self, lam):
        h, v = B.chi_h(lam), B.chi_v(lam)
        assert abs(h + v - 1.0) < 1e-12
        if abs(lam) > 0.6:
            assert h == 0.0
        if abs(lam) < 0.55:
            assert v == 0.0

    def test_tilde_absorption(self):
        lam = np.linspace(-1, 1, 2001)
        assert np.max(np.abs(B.chi_h_tilde(lam) * B.chi_h(lam) - B.chi_h(lam))) < 1e-14
        assert np.max(np.abs(B.chi_v_tilde(lam) * B.chi_v(lam) - B.chi_v(lam))) < 1e-14

    def test_angular_partition_sums(self):
        lam = np.linspace(-0.99, 0.99, 801)
        total = sum(B.chi_hq(lam, q) for q in range(-12, 0))
        # sums to chi_h_leq(-1): 1 on supp chi_h, away from the Lambda = 0
        # hole left by the finite dyadic range
        on_h = (np.abs(lam) <= 0.6) & (np.abs(lam) > 2.0**-10)
        assert np.max(np.abs(total[on_h] - 1.0)) < 1e-10
        rho = np.sqrt(1 - lam**2)
        totv = sum(B.chi_vp(lam, p) for p in range(-12, 0))
        on_v = (np.abs(lam) >= 0.55) & (rho > 2.0**-10)
        assert np.max(np.abs(totv[on_v] - 1.0)) < 1e-10

    def test_spec_point_values(self):
        # chi_h = 1 at Lambda ~ 0.0995; chi_v = 1 at Lambda ~ 0.995
        lam1 = 0.1 / np.sqrt(1.0**2 + 0.1**2)
        assert B.chi_h(lam1) == 1.0
        lam2 = 1.0 / np.sqrt(0.1**2 + 1.0**2)
        assert B.chi_v(lam2) == 1.0


class TestProjections:
    def test_shell_partition_on_grid(self, grid16, rng):
        f = random_scalar(grid16, rng)
        ks = range(-6, 8)
        acc = np.zeros(grid16.shape, dtype=complex)
        for k in ks:
            acc += projection_weight(grid16, None, k=k) * f.coeffs
        live = np.broadcast_to(grid16.xi_abs > 0, grid16.shape)
        assert np.max(np.abs(acc[live] - f.coeffs[live])) < 1e-12 * np.abs(f.coeffs).max()

    def test_tilde_absorbs(self, grid16, rng):
        f = random_scalar(grid16, rng)
        for flavor in ("h", "v"):
            pk = project(f, flavor, k=1)
            pt = project(pk, flavor, k=1, tilde=True)
            assert (pt - pk).l2_norm() <= 1e-13 * max(pk.l2_norm(), 1e-30)

    def test_unresolvable_warns_and_zeroes(self, grid16, rng):
        f = random_scalar(grid16, rng)
        with pytest.warns(UnresolvableLocalizationWarning):
            out = project(f, "h", k=40)
        assert out.l2_norm() == 0.0

    def test_hq_requires_valid_q(self, grid16, rng):
        f = random_scalar(grid16, rng)
        with pytest.raises(ValueError):
            project(f, "h", q=0)

    def test_shell_range_counts(self, grid16):
        ks = shell_range(grid16, "h", min_modes=8)
        assert ks, "expected some resolvable shells"
        for k in ks:
            w = projection_weight(grid16, "h", k=k)
            assert np.count_nonzero(w > 0) >= 8


class TestSpatial:
    def test_z_partition(self, grid16, rng):
        f = random_scalar(grid16, rng)
        phys = inverse_transform(f)
        acc = np.zeros(grid16.shape)
        for l in z_partition_range(grid16):
            acc += zh_weight(grid16, "Z_l", l)
        off_plane = np.broadcast_to(np.abs(grid16.x3) > 0, grid16.shape)
        assert np.max(np.abs(acc[off_plane] - 1.0)) < 1e-12
        total = sum(
            inverse_transform(spatial_localize(f, "Z_l", l))
            for l in z_partition_range(grid16)
        )
        assert np.max(np.abs((total - phys)[off_plane])) < 1e-10 * np.abs(phys).max()

    def test_plateau_value(self):
        g = Grid(32, 1.0)
        # phi(2^0 |x3|) = 1 on 1.0 <= |x3| <= 1.8 (so in particular at 1.5)
        w = zh_weight(g, "Z_l", 0)
        x3 = np.abs(np.broadcast_to(g.x3, g.shape))
        sel = (x3 >= 1.05) & (x3 <= 1.75)
        assert sel.any() and np.all(w[sel] == 1.0)

    def test_modified_cases(self, grid16):
        k = 2
        assert np.all(zh_weight(grid16, "Z_l_mod_k", -k - 1, k=k) == 0)
        a = zh_weight(grid16, "Z_l_mod_k", -k, k=k)
        b = zh_weight(grid16, "Z_leq", -k)
        assert np.array_equal(a, b)
        c = zh_weight(grid16, "Z_l_mod_k", -k + 1, k=k)
        d = zh_weight(grid16, "Z_l", -k + 1)
        assert np.array_equal(c, d)

    def test_signed_halves(self, grid16):
        zp = zh_weight(grid16, "Z_l_plus", 1)
        zm = zh_weight(grid16, "Z_l_minus", 1)
        z = zh_weight(grid16, "Z_l", 1)
        x3 = np.broadcast_to(grid16.x3, grid16.shape)
        assert np.all(zp[x3 <= 0] == 0)
        assert np.all(zm[x3 >= 0] == 0)
        assert np.max(np.abs(zp + zm - z * (np.abs(x3) > 0))) < 1e-14

    def test_h_weight_radial(self, grid16):
        w = zh_weight(grid16, "H_l", 1)
        xh = np.hypot(
            np.broadcast_to(grid16.x1, grid16.shape),
            np.broadcast_to(grid16.x2, grid16.shape),
        )
        assert np.all(w[(xh < 0.9 * 2) | (xh > 2 * 2)] == 0)


class TestRingLocalizers:
    def test_partition(self, grid16, rng):
        f = random_scalar(grid16, rng, axis_free=True)
        J = 2
        js = active_ring_indices(f, J)
        lo, hi = min(js) - 1, max(js) + 1
        acc = SpectralField.zeros(grid16)
        for j in range(lo, hi + 1):
            acc = acc + ring_localize(f, J, j)
        assert (acc - f).l2_norm() / f.l2_norm() < 1e-12

    def test_disjoint_supports(self, grid16):
        w1 = ring_weight(grid16, 3, 4)
        w2 = ring_weight(grid16, 3, 6)
        assert np.max(w1 * w2) == 0.0

    def test_refinement_overlap_bound(self, grid16):
        # Q^J_j Q^{J+1}_{j'} = 0 unless |j' - 4 j| <= 2
        J = 1
        for j in (-2, 0, 3):
            wj = ring_weight(grid16, J, j)
            if not wj.any():
                continue
            for dj in (-4, -3, 3, 4):
                wf = ring_weight(grid16, J + 1, 4 * j + dj)
                assert np.max(wj * wf) == 0.0

    def test_index_cap(self, grid16, rng):
        f = random_scalar(grid16, rng, axis_free=True)
        with pytest.raises(ValueError, match="10"):
            ring_localize(f, 1, 100)


def _bilinear(signs, t):
    def B_(a, b):
        return mult.bilinear_factored(a, b, signs, t, plan="total")

    return B_


class TestTelescope:
    @pytest.mark.parametrize("levels", [(5, 7), (1, 3)])
    def test_exactness(self, grid16, rng, levels):
        J0, Jmax = levels
        g1 = random_scalar(grid16, rng, axis_free=True)
        g2 = random_scalar(grid16, rng, axis_free=True)
        Bf = _bilinear(SignTriple(+1, +1, +1), 1.2)
        direct = Bf(g1, g2)
        dec = telescope(Bf, g1, g2, J0, Jmax)
        rel = (dec.total - direct).l2_norm() / direct.l2_norm()
        assert rel < 1e-12

    def test_exact_for_any_bilinear(self, grid16, rng):
        # plain product bilinear map
        def Bf(a, b):
            from rotflow.spectral import transform

            return transform(
                grid16, inverse_transform(a) * inverse_transform(b)
            )

        g1 = random_scalar(grid16, rng, axis_free=True)
        g2 = random_scalar(grid16, rng, axis_free=True)
        direct = Bf(g1, g2)
        dec = telescope(Bf, g1, g2, 2, 4)
        assert (dec.total - direct).l2_norm() / direct.l2_norm() < 1e-12

    def test_single_distant_rings_route_group1(self, grid16, rng):
        f = random_scalar(grid16, rng, axis_free=True)
        J0 = 5
        js = active_ring_indices(f, J0)
        g1 = ring_localize(f, J0, js[0])
        g2 = ring_localize(f, J0, js[-1])
        assert js[-1] - js[0] > 3
        Bf = _bilinear(SignTriple(+1, +1, +1), 0.5)
        dec = telescope(Bf, g1, g2, J0, 6, keep_fields=True)
        live = [p for p in dec.pieces if p.norm > 1e-12 * max(1.0, dec.total.l2_norm())]
        assert live and all(p.group == 1 for p in live)

    def test_colocated_finest_rings_route_group3(self, grid16, rng):
        f = random_scalar(grid16, rng, axis_free=True)
        Jmax = 6
        js = active_ring_indices(f, Jmax)
        g1 = ring_localize(f, Jmax, js[0])
        g2 = ring_localize(f, Jmax, js[0])
        Bf = _bilinear(SignTriple(+1, +1, +1), 0.5)
        dec = telescope(Bf, g1, g2, 5, Jmax)
        live = [p for p in dec.pieces if p.norm > 1e-12 * max(1.0, dec.total.l2_norm())]
        assert live and all(p.group == 3 for p in live)

    def test_axis_modes_rejected(self, grid16, rng):
        c = np.zeros(grid16.shape, dtype=complex)
        c[0, 0, 1] = 1.0
        bad = SpectralField(grid16, c)
        good = random_scalar(grid16, rng, axis_free=True)
        with pytest.raises(ValueError, match="axis"):
            telescope(lambda a, b: a, bad, good, 5, 6)


class TestWavePackets:
    def test_membership_examples(self):
        geom = WavePacketGeometry(m=6, J=2, j=3)
        t = 70.0
        # center of B(0): -x3 strictly between t/rho2 and t/rho1, small |x_h|
        mid = 0.5 * (t / geom.rho1 + t / geom.rho2)
        rec = wavepacket_sets(geom, (0.5, 0.0, -mid), t)
        assert rec["in_cylinder"] and rec["level"] == 0
        # far outside the cylinder
        rec = wavepacket_sets(geom, (0.0, 0.0, +t), t)
        assert not rec["in_cylinder"] and rec["level"] is None

    def test_level_rule_dyadic(self):
        geom = WavePacketGeometry(m=8, J=2, j=0)
        t = 2.0**8
        # choose x with d exactly 5 -> level 2 (4 <= 5 < 8)
        target = 5.0 * 2.0 ** (geom.m - 2 * geom.J)
        x3 = -(t / geom.rho1) - target
        rec = wavepacket_sets(geom, (1.0, 0.0, x3), t)
        if rec["in_cylinder"]:
            assert rec["level"] == 2
            assert abs(rec["distance"] - 5.0) < 1e-9

    def test_levels_partition_cylinder(self):
        geom = WavePacketGeometry(m=5, J=1, j=1)
        t = 40.0
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = (
                rng.uniform(-30, 30),
                rng.uniform(-30, 30),
                rng.uniform(-700, 10),
            )
            rec = wavepacket_sets(geom, x, t)
            if rec["in_cylinder"]:
                assert rec["level"] is not None and rec["level"] >= 0

    def test_b_sets_disjoint_in_l(self):
        # levels are single-valued by construction; check the grid classifier
        g = Grid(32, 8.0)
        geom = WavePacketGeometry(m=4, J=1, j=0)
        lv = wavepacket_level_grid(geom, g, 17.0)
        assert lv.shape == g.shape
        assert lv.min() >= -1

    def test_distance_scaling_law(self):
        # for x in B(l), l >= 1: dist(x3, support segment) ~ 2^{l+m-2J}
        geom = WavePacketGeometry(m=9, J=2, j=2)
        t = 2.0**9
        lo, hi = geom.support_segment(t)
        rng = np.random.default_rng(3)
        for _ in range(300):
            x3 = -rng.uniform(t / geom.C2 + 1, geom.C2 * t - 1)
            rec = wavepacket_sets(geom, (1.0, 0.0, x3), t)
            lvl = rec["level"]
            if lvl is None or lvl < 2:
                continue
            dist = min(abs(-x3 - lo), abs(-x3 - hi))
            ratio = dist / 2.0 ** (lvl + geom.m - 2 * geom.J)
            assert 0.3 <= ratio <= 3.0

    def test_out_of_regime_warns(self):
        with pytest.warns(UserWarning, match="asymptotic"):
            WavePacketGeometry(m=6, J=5, j=0)

    def test_index_cap(self):
        with pytest.raises(ValueError):
            WavePacketGeometry(m=40, J=6, j=10 * 4**6 + 1)


class TestSelectors:
    def test_roundtrip_equivalences(self, grid16, rng):
        f = random_scalar(grid16, rng, axis_free=True)
        pairs = [
            ("Pk:h:k=0", project(f, "h", k=0)),
            ("Pk:v:k=1", project(f, "v", k=1)),
            ("Pk:h:q=-3:k=0", project(f, "h", q=-3, k=0)),
            ("P:h", project(f, "h")),
            ("P:h:tilde", project(f, "h", tilde=True)),
            ("P:v:leq:p=-2", project(f, "v", p=-2, leq=True)),
            ("Z:l=1", spatial_localize(f, "Z_l", 1)),
            ("H:l=1", spatial_localize(f, "H_l", 1)),
            ("Z:l=-2:k=2", spatial_localize(f, "Z_l_mod_k", -2, k=2)),
            ("Q:J=2:j=3", ring_localize(f, 2, 3)),
        ]
        for sel, direct in pairs:
            out = apply_selector(f, sel)
            assert (out - direct).l2_norm() <= 1e-14 * max(direct.l2_norm(), 1e-30), sel

    def test_bad_selectors(self, grid16, rng):
        f = random_scalar(grid16, rng)
        for sel in ("Pk:h", "Z", "Q:J=1", "XX:l=1"):
            with pytest.raises(ValueError):
                apply_selector(f, sel)
