"""Periodic-box spectral core: grids, transforms, differential operators,
Leray projection, helical decomposition and the exact rotation semigroup.

The physical domain is the centered cube [-pi*L, pi*L)^3 sampled on an n^3
lattice; the frequency lattice is {m/L : m integer, -n/2 <= m < n/2} per
axis.  Transform conventions: forward integral without prefactor, inverse
with (2*pi)^-3, so the discrete Parseval identity reads

    ||f||_{L2}^2 = (2*pi*L/n)^3 * sum |samples|^2
                 = (2*pi*L)^-3  * sum |coefficients|^2.

All fields are mean-free (the zero mode is pinned to 0), which makes the
inverse operators |grad|^-1, Laplacian^-1 well defined.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "transform",
    "inverse_transform",
    "differential",
    "gradient",
    "divergence",
    "curl",
    "inv_modulus",
    "inv_laplacian",
    "d3_inv_laplacian",
    "leray_project",
    "helical_split",
    "helical_recompose",
    "helical_project",
    "dispersion",
    "semigroup",
    "dealias",
    "save_snapshot",
    "load_snapshot",
]

_SNAP_MAGIC = b"RFSNAP01"


class Grid:
    """Cubic periodic lattice with n points per axis on a box of side 2*pi*L.

    Precomputes broadcastable wavevector arrays, the dispersion relation
    Lambda = xi3/|xi|, centered physical coordinates and the 2/3-rule
    dealiasing mask.
    """

    def __init__(self, n: int, L: float = 1.0):
        if n < 8 or n % 2 != 0:
            raise ValueError(f"n_per_axis must be even and >= 8, got {n}")
        if L <= 0:
            raise ValueError(f"box_half_period L must be positive, got {L}")
        self.n = int(n)
        self.L = float(L)
        self.dx = 2.0 * np.pi * L / n

        m = np.fft.fftfreq(n, d=1.0 / n)  # integer indices 0..n/2-1, -n/2..-1
        self.modes = m.astype(np.int64)
        xi = m / L
        self.xi1 = xi.reshape(n, 1, 1)
        self.xi2 = xi.reshape(1, n, 1)
        self.xi3 = xi.reshape(1, 1, n)

        self.xi_sq = self.xi1**2 + self.xi2**2 + self.xi3**2
        self.xi_abs = np.sqrt(self.xi_sq)
        self.xih_sq = self.xi1**2 + self.xi2**2
        self.xih_abs = np.sqrt(self.xih_sq)

        # safe divisors: 1 at the excluded modes, which callers must mask
        self._abs_safe = np.where(self.xi_abs == 0, 1.0, self.xi_abs)
        self._sq_safe = np.where(self.xi_sq == 0, 1.0, self.xi_sq)
        self._h_safe = np.where(self.xih_abs == 0, 1.0, self.xih_abs)

        with np.errstate(invalid="ignore"):
            lam = np.where(self.xi_abs == 0, 0.0, self.xi3 / self._abs_safe)
        self.lam = lam
        self.rho_bar = np.sqrt(np.maximum(0.0, 1.0 - lam**2))  # sqrt(1-Lambda^2)

        self.axis_mask = self.xih_abs == 0  # vertical frequency axis xi_h = 0
        # alternating sign (-1)^m per axis links centered x to fftn layout
        s = np.where(m.astype(np.int64) % 2 == 0, 1.0, -1.0)
        self.phase = s.reshape(n, 1, 1) * s.reshape(1, n, 1) * s.reshape(1, 1, n)

        cut = n / 3.0
        keep = np.abs(m) <= cut
        self.dealias_mask = (
            keep.reshape(n, 1, 1) & keep.reshape(1, n, 1) & keep.reshape(1, 1, n)
        )

        x = (np.arange(n) - n // 2) * self.dx
        self.x1 = x.reshape(n, 1, 1)
        self.x2 = x.reshape(1, n, 1)
        self.x3 = x.reshape(1, 1, n)

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    def wavevector(self, index) -> np.ndarray:
        """Frequency triple for a lattice index triple (bijective)."""
        i, j, k = index
        return np.array([self.modes[i], self.modes[j], self.modes[k]]) / self.L

    def meshgrid_x(self):
        return np.broadcast_arrays(self.x1, self.x2, self.x3)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.L == other.L

    def __hash__(self):
        return hash((self.n, self.L))

    def __repr__(self):
        return f"Grid(n={self.n}, L={self.L})"


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass
class SpectralField:
    """Complex Fourier coefficients of a scalar field, fftn index layout."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def l2_norm(self) -> float:
        """Discrete L2(box) norm via the coefficient-side Parseval formula."""
        w = (2.0 * np.pi * self.grid.L) ** -3
        return float(np.sqrt(w * np.sum(np.abs(self.coeffs) ** 2)))

    def hermitian_defect(self) -> float:
        """Relative deviation from coeff(-xi) = conj(coeff(xi))."""
        flipped = _reverse_modes(self.coeffs)
        num = np.max(np.abs(self.coeffs - np.conj(flipped)))
        den = np.max(np.abs(self.coeffs))
        return float(num / den) if den > 0 else 0.0

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


def _reverse_modes(c: np.ndarray) -> np.ndarray:
    """Coefficient array evaluated at -xi (index m -> -m mod n, per axis)."""
    out = c
    for ax in range(3):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


@dataclass
class VectorField:
    """Triple of SpectralFields on a shared grid."""

    components: tuple
    divergence_free: bool = False

    def __post_init__(self):
        c1, c2, c3 = self.components
        _check_same_grid(c1, c2)
        _check_same_grid(c1, c3)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def coeff_stack(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    def copy(self) -> "VectorField":
        return VectorField(
            tuple(c.copy() for c in self.components), self.divergence_free
        )

    def __add__(self, other):
        return VectorField(
            tuple(a + b for a, b in zip(self.components, other.components)),
            self.divergence_free and other.divergence_free,
        )

    def __sub__(self, other):
        return VectorField(
            tuple(a - b for a, b in zip(self.components, other.components)),
            self.divergence_free and other.divergence_free,
        )

    def __mul__(self, scalar):
        return VectorField(
            tuple(c * scalar for c in self.components), self.divergence_free
        )

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(tuple(-c for c in self.components), self.divergence_free)

    def l2_norm(self) -> float:
        return float(np.sqrt(sum(c.l2_norm() ** 2 for c in self.components)))

    def divergence_defect(self) -> float:
        """max |xi . u_hat| / max |xi| |u_hat| over the lattice."""
        g = self.grid
        c1, c2, c3 = (c.coeffs for c in self.components)
        num = np.max(np.abs(g.xi1 * c1 + g.xi2 * c2 + g.xi3 * c3))
        den = np.max(
            g.xi_abs * np.sqrt(np.abs(c1) ** 2 + np.abs(c2) ** 2 + np.abs(c3) ** 2)
        )
        return float(num / den) if den > 0 else 0.0

    @classmethod
    def zeros(cls, grid: Grid, divergence_free: bool = True) -> "VectorField":
        return cls(tuple(SpectralField.zeros(grid) for _ in range(3)), divergence_free)

    @classmethod
    def from_coeffs(cls, grid: Grid, c1, c2, c3, divergence_free=False):
        return cls(
            (
                SpectralField(grid, c1),
                SpectralField(grid, c2),
                SpectralField(grid, c3),
            ),
            divergence_free,
        )


# ---------------------------------------------------------------------------
# transforms


def transform(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Forward transform of physical samples on the centered cube."""
    if samples.shape != grid.shape:
        raise ValueError(
            f"sample shape {samples.shape} does not match grid {grid.shape}"
        )
    coeffs = grid.dx**3 * sfft.fftn(np.asarray(samples, dtype=np.complex128))
    coeffs *= grid.phase
    return SpectralField(grid, coeffs)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Physical samples (complex; take .real for real-valued fields)."""
    g = field.grid
    scale = g.n**3 / (2.0 * np.pi * g.L) ** 3
    return scale * sfft.ifftn(field.coeffs * g.phase)


def transform_vector(grid: Grid, samples3, divergence_free=False) -> VectorField:
    return VectorField(
        tuple(transform(grid, s) for s in samples3), divergence_free
    )


def inverse_transform_vector(v: VectorField):
    return tuple(inverse_transform(c) for c in v.components)


# ---------------------------------------------------------------------------
# differential operators (mode-wise multipliers)


def _require_zero_mean(field, op_name):
    # rounding-level zero modes (relative to the field size) are tolerated
    fields = field.components if isinstance(field, VectorField) else (field,)
    scale = max(float(np.abs(f.coeffs).max()) for f in fields)
    for f in fields:
        if abs(f.coeffs[0, 0, 0]) > 1e-10 * scale:
            raise ValueError(f"{op_name} requires a zero-mean input (zero mode != 0)")


def _map_scalar(field, fn):
    if isinstance(field, VectorField):
        return VectorField(
            tuple(fn(c) for c in field.components), field.divergence_free
        )
    return fn(field)


def gradient(f: SpectralField) -> VectorField:
    g = f.grid
    return VectorField.from_coeffs(
        g, 1j * g.xi1 * f.coeffs, 1j * g.xi2 * f.coeffs, 1j * g.xi3 * f.coeffs
    )


def divergence(v: VectorField) -> SpectralField:
    g = v.grid
    c1, c2, c3 = (c.coeffs for c in v.components)
    return SpectralField(g, 1j * (g.xi1 * c1 + g.xi2 * c2 + g.xi3 * c3))


def curl(v: VectorField) -> VectorField:
    g = v.grid
    c1, c2, c3 = (c.coeffs for c in v.components)
    return VectorField.from_coeffs(
        g,
        1j * (g.xi2 * c3 - g.xi3 * c2),
        1j * (g.xi3 * c1 - g.xi1 * c3),
        1j * (g.xi1 * c2 - g.xi2 * c1),
        divergence_free=True,
    )


def inv_modulus(field):
    """|grad|^-1: divide by |xi| mode-wise; zero-mean input required."""
    _require_zero_mean(field, "inv_modulus")

    def fn(f):
        g = f.grid
        out = f.coeffs / g._abs_safe
        out = np.where(g.xi_abs == 0, 0.0, out)
        return SpectralField(g, out)

    return _map_scalar(field, fn)


def modulus(field):
    """|grad|: multiply by |xi| mode-wise."""

    def fn(f):
        return SpectralField(f.grid, f.coeffs * f.grid.xi_abs)

    return _map_scalar(field, fn)


def inv_laplacian(field):
    """Laplacian^-1: multiply by -1/|xi|^2; zero-mean input required."""
    _require_zero_mean(field, "inv_laplacian")

    def fn(f):
        g = f.grid
        out = -f.coeffs / g._sq_safe
        out = np.where(g.xi_abs == 0, 0.0, out)
        return SpectralField(g, out)

    return _map_scalar(field, fn)


def d3_inv_laplacian(field):
    """d/dx3 Laplacian^-1: multiply by -i*xi3/|xi|^2."""
    _require_zero_mean(field, "d3_inv_laplacian")

    def fn(f):
        g = f.grid
        out = -1j * g.xi3 * f.coeffs / g._sq_safe
        out = np.where(g.xi_abs == 0, 0.0, out)
        return SpectralField(g, out)

    return _map_scalar(field, fn)


_DIFFERENTIAL = {
    "gradient": gradient,
    "divergence": divergence,
    "curl": curl,
    "inv_modulus": inv_modulus,
    "inv_laplacian": inv_laplacian,
    "d3_inv_laplacian": d3_inv_laplacian,
}


def differential(field, kind: str):
    """Dispatch to one of the named spectral differential operators."""
    try:
        op = _DIFFERENTIAL[kind]
    except KeyError:
        raise ValueError(
            f"unknown differential kind {kind!r}; choose from {sorted(_DIFFERENTIAL)}"
        ) from None
    return op(field)


# ---------------------------------------------------------------------------
# projections and the helical split


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields, Id - grad inv_lap div."""
    _require_zero_mean(v, "leray_project")
    g = v.grid
    c1, c2, c3 = (c.coeffs for c in v.components)
    dot = (g.xi1 * c1 + g.xi2 * c2 + g.xi3 * c3) / g._sq_safe
    out = [c1 - g.xi1 * dot, c2 - g.xi2 * dot, c3 - g.xi3 * dot]
    for c in out:
        c[0, 0, 0] = 0.0  # all fields stay mean-free
    return VectorField.from_coeffs(g, *out, divergence_free=True)


def _cross_xi(grid, c1, c2, c3):
    """i xi x c, the Fourier symbol of the curl."""
    return (
        1j * (grid.xi2 * c3 - grid.xi3 * c2),
        1j * (grid.xi3 * c1 - grid.xi1 * c3),
        1j * (grid.xi1 * c2 - grid.xi2 * c1),
    )


def helical_project(v: VectorField, sign: int) -> VectorField:
    """P_+/- = (Id +/- |grad|^-1 curl)/2 on a divergence-free field."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    g = v.grid
    c1, c2, c3 = (c.coeffs for c in v.components)
    w1, w2, w3 = _cross_xi(g, c1, c2, c3)
    out = []
    for c, w in ((c1, w1), (c2, w2), (c3, w3)):
        oc = 0.5 * (c + sign * w / g._abs_safe)
        out.append(np.where(g.xi_abs == 0, 0.0, oc))
    return VectorField.from_coeffs(g, *out, divergence_free=True)


def helical_split(v: VectorField):
    """u = u_+ + u_- with curl u_+/- = +/- |grad| u_+/-, L2-orthogonal."""
    if v.divergence_defect() > 1e-10:
        raise ValueError(
            f"helical_split requires a divergence-free field "
            f"(defect {v.divergence_defect():.2e})"
        )
    _require_zero_mean(v, "helical_split")
    return helical_project(v, +1), helical_project(v, -1)


def helical_recompose(u_plus: VectorField, u_minus: VectorField) -> VectorField:
    out = u_plus + u_minus
    out.divergence_free = True
    return out


# ---------------------------------------------------------------------------
# dispersion relation and semigroup


def dispersion(xi) -> float:
    """Lambda(xi) = xi3/|xi| for a single frequency triple."""
    xi = np.asarray(xi, dtype=float)
    r = np.sqrt(np.sum(xi**2))
    if r == 0:
        raise ValueError("dispersion is undefined at xi = 0")
    return float(xi[2] / r)


def semigroup(field, t: float, sign: int):
    """e^{sign * i t Lambda}: unitary mode-wise rotation."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")

    def fn(f):
        g = f.grid
        return SpectralField(f.grid, f.coeffs * np.exp(1j * sign * t * g.lam))

    return _map_scalar(field, fn)


def dealias(field):
    """Two-thirds rule: zero every mode with any |xi_j| > (n/3)/L."""

    def fn(f):
        return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))

    return _map_scalar(field, fn)


# ---------------------------------------------------------------------------
# snapshot files: header + raw little-endian complex64, C-order lattice


def save_snapshot(path, field, kind: str = "scalar", time: float = 0.0):
    comps = field.components if isinstance(field, VectorField) else (field,)
    g = comps[0].grid
    kind_b = kind.encode()[:16].ljust(16, b"\0")
    with open(path, "wb") as fh:
        fh.write(_SNAP_MAGIC)
        fh.write(struct.pack("<id16sdi", g.n, g.L, kind_b, time, len(comps)))
        for c in comps:
            fh.write(np.ascontiguousarray(c.coeffs, dtype=np.complex64).tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _SNAP_MAGIC:
            raise ValueError(f"not a rotflow snapshot: {path}")
        n, L, kind_b, time, ncomp = struct.unpack("<id16sdi", fh.read(40))
        grid = Grid(n, L)
        comps = []
        for _ in range(ncomp):
            raw = np.frombuffer(
                fh.read(8 * n**3), dtype=np.complex64
            ).reshape(grid.shape)
            comps.append(SpectralField(grid, raw.astype(np.complex128)))
    kind = kind_b.rstrip(b"\0").decode()
    meta = {"kind": kind, "time": time}
    if ncomp == 1:
        return comps[0], meta
    return VectorField(tuple(comps)), meta
