"""Dispersive profiles and the scalar gauge reduction.

The helical parts u_+/- of a divergence-free velocity evolve linearly as
e^{+/- i t Lambda} u_+/-(0); the profiles f_+/- = e^{-/+ i t Lambda} u_+/-
freeze that rotation out.  Away from the vertical frequency axis each
helical field reduces to a scalar through the vector-to-scalar operators

    R_+/- u = (1/2) e3 . ( |grad_h|^-1 curl u  +/-  |grad| |grad_h|^-1 u ),

whose inverse is built from the orthonormal frame (Gamma_1, Gamma_2) on the
Fourier sphere.  The frame degenerates on the axis xi_h = 0 (hairy-ball),
so every scalar-gauge operation here zeroes the discrete axis modes; vector
profiles carry the axis content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    dealias,
    divergence,
    helical_project,
    leray_project,
    modulus,
    semigroup,
    transform,
    inverse_transform,
)

__all__ = [
    "SignTriple",
    "VectorProfile",
    "ScalarProfile",
    "SIGN_TRIPLES",
    "gauge_frame",
    "r_pm",
    "r_pm_inverse",
    "nonlinearity",
    "nonlinearity_curl_form",
    "rhs_profile",
    "rhs_velocity",
    "reconstruct_velocity",
]


@dataclass(frozen=True)
class SignTriple:
    mu: int
    mu1: int
    mu2: int

    def __post_init__(self):
        for s in (self.mu, self.mu1, self.mu2):
            if s not in (+1, -1):
                raise ValueError(f"signs must be +1 or -1, got {s}")

    def __iter__(self):
        return iter((self.mu, self.mu1, self.mu2))


SIGN_TRIPLES = tuple(
    SignTriple(mu, mu1, mu2)
    for mu in (+1, -1)
    for mu1 in (+1, -1)
    for mu2 in (+1, -1)
)


@dataclass
class VectorProfile:
    """Pair of helical vector profiles (f_+, f_-) at a common time."""

    plus: VectorField
    minus: VectorField
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.plus.grid

    def copy(self):
        return VectorProfile(self.plus.copy(), self.minus.copy(), self.time)

    def helicity_defect(self) -> float:
        """max over signs of || curl f_s - s |grad| f_s || / || f_s ||."""
        out = 0.0
        for sign, f in ((+1, self.plus), (-1, self.minus)):
            n = f.l2_norm()
            if n == 0:
                continue
            from .spectral import curl

            d = (curl(f) - sign * modulus(f)).l2_norm() / n
            out = max(out, d)
        return out


@dataclass
class ScalarProfile:
    """Pair of scalar profiles (F_+, F_-); axis modes are identically zero."""

    plus: SpectralField
    minus: SpectralField
    time: float = 0.0

    def __post_init__(self):
        for f in (self.plus, self.minus):
            g = f.grid
            bad = np.abs(f.coeffs[np.broadcast_to(g.axis_mask, g.shape)])
            if bad.size and bad.max() != 0.0:
                raise ValueError("scalar profile carries nonzero axis modes")

    @property
    def grid(self) -> Grid:
        return self.plus.grid


# ---------------------------------------------------------------------------
# gauge frame on the Fourier sphere


def gauge_frame(xi):
    """Orthonormal pair (Gamma_1, Gamma_2) with Gamma_1 _|_ xi, 0-homogeneous.

    Gamma_1 = (-xi_2, xi_1, 0)/|xi_h|, Gamma_2 = (xi/|xi|) x Gamma_1.
    Rejected on the vertical axis xi_h = 0 where no smooth frame exists.
    """
    xi = np.asarray(xi, dtype=float)
    rh = np.hypot(xi[0], xi[1])
    if rh == 0:
        raise ValueError("gauge frame is singular on the axis xi_h = 0")
    r = np.sqrt(np.sum(xi**2))
    g1 = np.array([-xi[1] / rh, xi[0] / rh, 0.0])
    g2 = np.array([-xi[0] * xi[2] / (rh * r), -xi[1] * xi[2] / (rh * r), rh / r])
    return g1, g2


def _frame_arrays(grid: Grid):
    """Grid-wise (Gamma_1 +/- i Gamma_2) building blocks, zero on the axis."""
    rh = grid._h_safe
    r = grid._abs_safe
    off = ~grid.axis_mask
    g11 = np.where(off, -grid.xi2 / rh, 0.0)
    g12 = np.where(off, grid.xi1 / rh, 0.0)
    g21 = np.where(off, -grid.xi1 * grid.xi3 / (rh * r), 0.0)
    g22 = np.where(off, -grid.xi2 * grid.xi3 / (rh * r), 0.0)
    g23 = np.where(off, grid.xih_abs / r, 0.0)
    return (g11, g12, 0.0), (g21, g22, g23)


# ---------------------------------------------------------------------------
# vector-to-scalar reduction R_+/- and its inverse


def r_pm(u: VectorField, sign: int) -> SpectralField:
    """R_+/- u = (1/2) e3 . (|grad_h|^-1 curl u +/- |grad||grad_h|^-1 u)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if u.divergence_defect() > 1e-10:
        raise ValueError(
            f"r_pm requires a divergence-free field (defect {u.divergence_defect():.2e})"
        )
    g = u.grid
    c1, c2, c3 = (c.coeffs for c in u.components)
    curl3 = 1j * (g.xi1 * c2 - g.xi2 * c1)
    out = 0.5 * (curl3 + sign * g.xi_abs * c3) / g._h_safe
    out = np.where(np.broadcast_to(g.axis_mask, g.shape), 0.0, out)
    return SpectralField(g, out)


def r_pm_inverse(G: SpectralField, sign: int) -> VectorField:
    """Reconstruct the helicity-`sign` divergence-free field with R_sign f = G.

    Fourier side: f_hat = -i G_hat (Gamma_1 + sign * i Gamma_2).
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    g = G.grid
    bad = np.abs(G.coeffs[np.broadcast_to(g.axis_mask, g.shape)])
    if bad.size and bad.max() != 0.0:
        raise ValueError("r_pm_inverse input must vanish on the axis xi_h = 0")
    (g11, g12, g13), (g21, g22, g23) = _frame_arrays(g)
    w = -1j * G.coeffs
    return VectorField.from_coeffs(
        g,
        w * (g11 + 1j * sign * g21),
        w * (g12 + 1j * sign * g22),
        w * (g13 + 1j * sign * g23),
        divergence_free=True,
    )


def zero_axis_modes(u: VectorField) -> VectorField:
    g = u.grid
    mask = np.broadcast_to(g.axis_mask, g.shape)
    return VectorField.from_coeffs(
        g,
        *(np.where(mask, 0.0, c.coeffs) for c in u.components),
        divergence_free=u.divergence_free,
    )


# ---------------------------------------------------------------------------
# profile-form nonlinearity


def _tensor_divergence(grid: Grid, a_phys, b_phys, apply_dealias=True):
    """div(a (x) b): component j is sum_i d_i (a_i b_j), pseudo-spectral."""
    out = []
    for j in range(3):
        flux = [transform(grid, a_phys[i] * b_phys[j]) for i in range(3)]
        cj = 1j * (
            grid.xi1 * flux[0].coeffs
            + grid.xi2 * flux[1].coeffs
            + grid.xi3 * flux[2].coeffs
        )
        out.append(cj)
    v = VectorField.from_coeffs(grid, *out)
    return dealias(v) if apply_dealias else v


def nonlinearity(
    f1: VectorField,
    f2: VectorField,
    signs: SignTriple,
    t: float,
    apply_dealias: bool = True,
) -> VectorField:
    """N(f1, f2) = -e^{-mu i t L} P_mu P_Leray div(e^{mu1 i t L} f1 (x) e^{mu2 i t L} f2)."""
    if f1.grid != f2.grid:
        raise ValueError("grid mismatch in nonlinearity")
    g = f1.grid
    u1 = semigroup(f1, t, signs.mu1)
    u2 = semigroup(f2, t, signs.mu2)
    a = [inverse_transform(c) for c in u1.components]
    b = [inverse_transform(c) for c in u2.components]
    w = _tensor_divergence(g, a, b, apply_dealias)
    w = leray_project(-1.0 * w)
    w = helical_project(w, signs.mu)
    return semigroup(w, t, -signs.mu)


def nonlinearity_curl_form(
    f1: VectorField,
    f2: VectorField,
    signs: SignTriple,
    t: float,
    apply_dealias: bool = True,
) -> VectorField:
    """Equivalent cross-product form mu2 e^{-mu i t L} P_mu P_L (u1 x |grad| u2).

    Valid when f2 has helicity mu2; used as an independent cross-check of the
    divergence form.
    """
    if f1.grid != f2.grid:
        raise ValueError("grid mismatch in nonlinearity_curl_form")
    g = f1.grid
    u1 = semigroup(f1, t, signs.mu1)
    u2 = modulus(semigroup(f2, t, signs.mu2))
    a = [inverse_transform(c) for c in u1.components]
    b = [inverse_transform(c) for c in u2.components]
    cx = a[1] * b[2] - a[2] * b[1]
    cy = a[2] * b[0] - a[0] * b[2]
    cz = a[0] * b[1] - a[1] * b[0]
    w = VectorField(
        (transform(g, cx), transform(g, cy), transform(g, cz))
    )
    if apply_dealias:
        w = dealias(w)
    w = leray_project(signs.mu2 * 1.0 * w)
    w = helical_project(w, signs.mu)
    return semigroup(w, t, -signs.mu)


def reconstruct_velocity(p: VectorProfile) -> VectorField:
    """u(t) = e^{i t Lambda} f_+ + e^{-i t Lambda} f_-."""
    u = semigroup(p.plus, p.time, +1) + semigroup(p.minus, p.time, -1)
    u.divergence_free = True
    return u


def rhs_profile(p: VectorProfile, apply_dealias: bool = True):
    """(d f_+/dt, d f_-/dt): the four sign-pair bilinear terms for each output.

    The sign-pair sum factorizes through the reconstructed velocity, so one
    tensor product u (x) u serves both outputs.
    """
    g = p.grid
    u = reconstruct_velocity(p)
    up = [inverse_transform(c) for c in u.components]
    w = _tensor_divergence(g, up, up, apply_dealias)
    w = leray_project(-1.0 * w)
    dplus = semigroup(helical_project(w, +1), p.time, -1)
    dminus = semigroup(helical_project(w, -1), p.time, +1)
    return dplus, dminus


def rhs_velocity(u: VectorField, apply_dealias: bool = True) -> VectorField:
    """du/dt = -P_L div(u (x) u) - P_L(e3 x u) for the velocity formulation."""
    g = u.grid
    up = [inverse_transform(c) for c in u.components]
    adv = _tensor_divergence(g, up, up, apply_dealias)
    c1, c2, c3 = (c.coeffs for c in u.components)
    cor = VectorField.from_coeffs(g, -c2, c1, np.zeros_like(c3))
    rhs = leray_project(-1.0 * (adv + cor))
    return rhs
