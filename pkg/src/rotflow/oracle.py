"""Slow reference computations used only by tests and acceptance runs.

Everything here is written independently of the production fast paths
(no shared transform or multiplier code) and uses compensated summation,
so oracle/fast-path agreement is a real cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid, SpectralField

__all__ = [
    "OracleBudget",
    "dft_direct",
    "bilinear_direct",
    "semigroup_pointwise",
    "operator_norm_probe",
]


@dataclass
class OracleBudget:
    max_grid: int = 16
    max_samples: int = 200_000
    seed: int = 0


def _fsum_complex(values) -> complex:
    arr = np.asarray(values).ravel()
    return complex(math.fsum(arr.real), math.fsum(arr.imag))


def dft_direct(grid: Grid, samples: np.ndarray, budget: OracleBudget | None = None):
    """Literal O(N^6) forward transform on the centered cube."""
    budget = budget or OracleBudget()
    if grid.n > budget.max_grid:
        raise ValueError(f"dft_direct budget exceeded: n={grid.n} > {budget.max_grid}")
    n, L = grid.n, grid.L
    x = (np.arange(n) - n // 2) * (2.0 * np.pi * L / n)
    m = np.fft.fftfreq(n, d=1.0 / n)
    xi = m / L
    w = (2.0 * np.pi * L / n) ** 3
    samples = np.asarray(samples, dtype=np.complex128)
    out = np.empty(grid.shape, dtype=np.complex128)
    # one lattice frequency at a time; fsum over the lexicographic sample order
    e1 = np.exp(-1j * np.outer(xi, x))
    for a in range(n):
        pa = e1[a].reshape(n, 1, 1)
        for b in range(n):
            pb = e1[b].reshape(1, n, 1)
            block = samples * (pa * pb)
            for c in range(n):
                out[a, b, c] = w * _fsum_complex(block * e1[c].reshape(1, 1, n))
    return SpectralField(grid, out)


def _lambda_vec(x1, x2, x3):
    r = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    r = np.where(r == 0, 1.0, r)
    return x3 / r


def _kahan_add(total, comp, term):
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def bilinear_direct(G1, G2, m_eval, signs, t, budget: OracleBudget | None = None):
    """Literal frequency-space double sum

        (2 pi L)^-3 sum_eta e^{i t Phi(xi,eta)} m(xi,eta) G1(xi-eta) G2(eta)

    over the lattice, with no wrap-around (G1 vanishes off the lattice) and
    Kahan-compensated accumulation.  ``m_eval(xi_tuple, eta_tuple) -> array``
    must broadcast over the xi grid for a fixed eta; ``signs`` is a
    SignTriple-like object with fields mu, mu1, mu2.
    """
    budget = budget or OracleBudget()
    grid = G1.grid
    if grid != G2.grid:
        raise ValueError("grid mismatch in bilinear_direct")
    if grid.n > budget.max_grid:
        raise ValueError(f"bilinear_direct budget exceeded: n={grid.n}")
    n, L = grid.n, grid.L
    m_int = grid.modes
    xi1, xi2, xi3 = (
        np.broadcast_to(grid.xi1, grid.shape),
        np.broadcast_to(grid.xi2, grid.shape),
        np.broadcast_to(grid.xi3, grid.shape),
    )
    lam_xi = _lambda_vec(xi1, xi2, xi3)

    c2 = G2.coeffs
    nz = np.argwhere(c2 != 0)
    total = np.zeros(grid.shape, dtype=np.complex128)
    comp = np.zeros_like(total)

    c1 = G1.coeffs
    mu, mu1, mu2 = signs.mu, signs.mu1, signs.mu2
    for ia, ib, ic in nz:
        ma, mb, mc = int(m_int[ia]), int(m_int[ib]), int(m_int[ic])
        eta = (ma / L, mb / L, mc / L)
        g2 = c2[ia, ib, ic]
        # G1(xi - eta) as a shifted array with zero fill off the lattice
        g1 = _shift_no_wrap(c1, m_int, (ma, mb, mc))
        live = g1 != 0
        if not live.any():
            continue
        d1, d2, d3 = xi1 - eta[0], xi2 - eta[1], xi3 - eta[2]
        lam_d = _lambda_vec(d1, d2, d3)
        lam_e = _lambda_vec(*(np.array(eta)))
        phi = -mu * lam_xi + mu1 * lam_d + mu2 * lam_e
        mval = m_eval((xi1, xi2, xi3), eta)
        term = np.where(live, np.exp(1j * t * phi) * mval * g1 * g2, 0.0)
        total, comp = _kahan_add(total, comp, term)
    out = (2.0 * np.pi * L) ** -3 * total
    return SpectralField(grid, out)


def _shift_no_wrap(c, modes, shift_ints):
    """Array c evaluated at frequency index (m - s), zero outside the lattice."""
    n = c.shape[0]
    half = n // 2
    order = np.argsort(modes)  # ascending frequency order
    inv = np.empty_like(order)
    inv[order] = np.arange(n)
    out = c
    for ax, s in enumerate(shift_ints):
        asc = np.take(out, order, axis=ax)
        shifted = np.zeros_like(asc)
        # ascending index i holds mode (i - half); want mode (i - half - s)
        src_lo = max(0, -s)
        src_hi = min(n, n - s)
        if src_lo < src_hi:
            dst = slice(src_lo + s, src_hi + s)
            src = slice(src_lo, src_hi)
            idx_dst = [slice(None)] * 3
            idx_src = [slice(None)] * 3
            idx_dst[ax] = dst
            idx_src[ax] = src
            shifted[tuple(idx_dst)] = asc[tuple(idx_src)]
        out = np.take(shifted, inv, axis=ax)
    return out


def semigroup_pointwise(field: SpectralField, t: float, x, sign: int = +1) -> complex:
    """Direct phase-sum evaluation of (e^{sign i t Lambda} f)(x) at one point."""
    g = field.grid
    if g.n > 32:
        raise ValueError("semigroup_pointwise budget: n <= 32")
    x = np.asarray(x, dtype=float)
    xi1 = np.broadcast_to(g.xi1, g.shape).ravel()
    xi2 = np.broadcast_to(g.xi2, g.shape).ravel()
    xi3 = np.broadcast_to(g.xi3, g.shape).ravel()
    lam = _lambda_vec(xi1, xi2, xi3)
    c = field.coeffs.ravel()
    phase = np.exp(1j * (sign * t * lam + xi1 * x[0] + xi2 * x[1] + xi3 * x[2]))
    vals = c * phase
    w = (2.0 * np.pi * g.L) ** -3  # (2pi)^-3 sum f_hat e^{...} dxi^3, dxi^3 = L^-3
    return complex(w * math.fsum(vals.real), w * math.fsum(vals.imag))


def operator_norm_probe(
    op,
    grid: Grid,
    trials: int = 8,
    power_iters: int = 8,
    op_adjoint=None,
    seed: int = 0,
):
    """Randomized lower-bound estimate of the L2->L2 operator norm.

    Gaussian probes give a floor; when the adjoint is supplied the best probe
    is refined by power iteration on A* A, which converges to the true norm.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    best_f = None
    for _ in range(trials):
        c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        f = SpectralField(grid, c)
        nf = f.l2_norm()
        if nf == 0:
            continue
        r = op(f).l2_norm() / nf
        if r >= best:
            best, best_f = r, f
    if op_adjoint is not None and best_f is not None:
        f = best_f
        for _ in range(power_iters):
            h = op_adjoint(op(f))
            nh = h.l2_norm()
            if nh == 0:
                break
            f = h * (1.0 / nh)
        nf = f.l2_norm()
        if nf > 0:
            best = max(best, op(f).l2_norm() / nf)
    return best
