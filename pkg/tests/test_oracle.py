import numpy as np
import pytest

from rotflow.oracle import (
    OracleBudget,
    bilinear_direct,
    dft_direct,
    operator_norm_probe,
    semigroup_pointwise,
)
from rotflow.profiles import SignTriple
from rotflow.spectral import (
    Grid,
    SpectralField,
    inverse_transform,
    semigroup,
    transform,
)

from conftest import random_scalar

PPP = SignTriple(+1, +1, +1)


class TestDftDirect:
    def test_matches_fast(self, grid8, rng):
        x = rng.standard_normal(grid8.shape)
        slow = dft_direct(grid8, x)
        fast = transform(grid8, x)
        assert (slow - fast).l2_norm() / fast.l2_norm() < 1e-11

    def test_delta_constant(self, grid8):
        x = np.zeros(grid8.shape)
        x[4, 4, 4] = 1.0
        out = dft_direct(grid8, x)
        assert np.max(np.abs(out.coeffs - out.coeffs[0, 0, 0])) < 1e-12

    def test_linearity(self, grid8, rng):
        a = rng.standard_normal(grid8.shape)
        b = rng.standard_normal(grid8.shape)
        lhs = dft_direct(grid8, a + 2.0 * b)
        rhs = dft_direct(grid8, a) + 2.0 * dft_direct(grid8, b)
        assert (lhs - rhs).l2_norm() <= 1e-12 * max(rhs.l2_norm(), 1e-30)

    def test_budget(self):
        g = Grid(32, 1.0)
        with pytest.raises(ValueError, match="budget"):
            dft_direct(g, np.zeros(g.shape))


class TestBilinearDirect:
    def test_m_one_t_zero_is_convolution(self, grid8, rng):
        G1 = random_scalar(grid8, rng, band=2)
        G2 = random_scalar(grid8, rng, band=2)
        out = bilinear_direct(G1, G2, lambda x, e: 1.0, PPP, 0.0)
        prod = transform(
            grid8, inverse_transform(G1) * inverse_transform(G2)
        )
        mask = np.broadcast_to(grid8.dealias_mask, grid8.shape)
        gap = np.abs((out - prod).coeffs)[mask].max()
        assert gap < 1e-12 * np.abs(prod.coeffs).max()

    def test_single_mode_shift(self, grid8):
        # G2 = delta at eta0 shifts G1 by eta0 and weights by m(xi, eta0)
        c1 = np.zeros(grid8.shape, dtype=complex)
        c1[1, 0, 0] = 2.0
        c1[0, 2, 1] = 1.5
        G1 = SpectralField(grid8, c1)
        c2 = np.zeros(grid8.shape, dtype=complex)
        c2[0, 0, 1] = 3.0
        G2 = SpectralField(grid8, c2)

        def m_eval(x, e):
            return x[0] + 2.0 * e[2]  # simple affine symbol

        out = bilinear_direct(G1, G2, m_eval, PPP, 0.0)
        w = (2 * np.pi * grid8.L) ** -3
        # xi = (1,0,1): xi - eta = (1,0,0)
        expect = w * (1.0 + 2.0) * 2.0 * 3.0
        assert out.coeffs[1, 0, 1] == pytest.approx(expect, rel=1e-12)
        # xi = (0,2,2): xi - eta = (0,2,1)
        expect2 = w * (0.0 + 2.0) * 1.5 * 3.0
        assert out.coeffs[0, 2, 2] == pytest.approx(expect2, rel=1e-12)
        # no wrap-around: shifting the top mode out of the lattice drops it
        live = np.argwhere(out.coeffs != 0)
        assert len(live) == 2

    def test_phase_factor(self, grid8):
        c1 = np.zeros(grid8.shape, dtype=complex)
        c1[0, 0, 1] = 1.0
        c2 = np.zeros(grid8.shape, dtype=complex)
        c2[0, 0, 1] = 1.0
        G1, G2 = SpectralField(grid8, c1), SpectralField(grid8, c2)
        t = 0.9
        out = bilinear_direct(G1, G2, lambda x, e: 1.0, PPP, t)
        # xi = (0,0,2): Phi = -1 + 1 + 1 = 1
        w = (2 * np.pi * grid8.L) ** -3
        assert out.coeffs[0, 0, 2] == pytest.approx(w * np.exp(1j * t), rel=1e-12)

    def test_budget(self):
        g = Grid(32, 1.0)
        z = SpectralField.zeros(g)
        with pytest.raises(ValueError, match="budget"):
            bilinear_direct(z, z, lambda x, e: 1.0, PPP, 0.0)


class TestSemigroupPointwise:
    def test_t_zero_matches_field(self, grid8, rng):
        f = random_scalar(grid8, rng)
        phys = inverse_transform(f)
        x = (
            float(grid8.x1[3, 0, 0]),
            float(grid8.x2[0, 5, 0]),
            float(grid8.x3[0, 0, 6]),
        )
        v = semigroup_pointwise(f, 0.0, x)
        assert abs(v - phys[3, 5, 6]) < 1e-11 * np.abs(phys).max()

    def test_matches_fast_path(self, grid8, rng):
        f = random_scalar(grid8, rng)
        t = 2.2
        phys = inverse_transform(semigroup(f, t, +1))
        for idx in ((0, 0, 0), (2, 3, 4), (7, 1, 5)):
            x = (
                float(grid8.x1[idx[0], 0, 0]),
                float(grid8.x2[0, idx[1], 0]),
                float(grid8.x3[0, 0, idx[2]]),
            )
            v = semigroup_pointwise(f, t, x, +1)
            assert abs(v - phys[idx]) < 1e-11 * np.abs(phys).max()

    def test_vertical_mode_rotates(self, grid8):
        c = np.zeros(grid8.shape, dtype=complex)
        c[0, 0, 1] = 1.0
        f = SpectralField(grid8, c)
        x = (0.0, 0.0, 0.0)
        v0 = semigroup_pointwise(f, 0.0, x)
        v1 = semigroup_pointwise(f, 1.3, x)
        assert v1 == pytest.approx(v0 * np.exp(1.3j), rel=1e-12)


class TestOperatorNormProbe:
    def test_identity(self, grid8):
        est = operator_norm_probe(lambda f: f, grid8, trials=3, seed=0)
        assert est == pytest.approx(1.0, rel=1e-12)

    def test_zero(self, grid8):
        est = operator_norm_probe(
            lambda f: SpectralField.zeros(grid8), grid8, trials=3, seed=0
        )
        assert est == 0.0

    def test_power_iteration_finds_top_multiplier(self, grid8):
        # multiplier operator with known norm 2.0 on one mode
        w = np.ones(grid8.shape)
        w[1, 2, 3] = 2.0

        def op(f):
            return SpectralField(grid8, f.coeffs * w)

        lower = operator_norm_probe(op, grid8, trials=2, power_iters=0, seed=0)
        refined = operator_norm_probe(
            op, grid8, trials=2, power_iters=60, op_adjoint=op, seed=0
        )
        assert lower <= refined <= 2.0 + 1e-12
        assert refined == pytest.approx(2.0, rel=1e-3)
