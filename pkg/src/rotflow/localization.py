"""Cutoff functions and localization operators.

Frequency side: the horizontal/vertical split chi_h + chi_v = 1 (supports
|Lambda| <= 0.6 and |Lambda| >= 0.55), dyadic shells in |xi_h| / |xi_3|,
angular shells in Lambda and sqrt(1-Lambda^2), and thin rings Q^J_j in
ln|xi_h| at scale 4^-J.  Physical side: dyadic localizers Z_l, H_l in
|x_3| / |x_h| and their modified variants.  On top of these sit the exact
multiscale telescoping decomposition of bilinear forms and the traveling
wave-packet set geometry.

Every cutoff is realized through one concrete C-infinity template: the
smoothstep S(s) = sig(s) / (sig(s) + sig(1-s)) with sig(s) = exp(-1/s) for
s > 0, so all partition-of-unity identities hold to machine precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid, SpectralField, VectorField, transform, inverse_transform

__all__ = [
    "CutoffBank",
    "DEFAULT_BANK",
    "smoothstep",
    "project",
    "apply_selector",
    "spatial_localize",
    "zh_weight",
    "ring_localize",
    "active_ring_indices",
    "telescope",
    "TelescopePiece",
    "TelescopeDecomposition",
    "WavePacketGeometry",
    "wavepacket_sets",
    "UnresolvableLocalizationWarning",
]


class UnresolvableLocalizationWarning(UserWarning):
    """A requested dyadic ring has no support on the grid."""


def smoothstep(s):
    """S(s) = sig(s)/(sig(s)+sig(1-s)); 0 for s<=0, 1 for s>=1, C-infinity."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(1 - s > 0, np.exp(-1.0 / np.where(1 - s > 0, 1 - s, 1.0)), 0.0)
    return a / (a + b)


class CutoffBank:
    """Concrete realizations of the bump/ring/transition cutoffs.

    psi: even bump, 1 on [-1.8, 1.8], supported in [-2, 2].
    ring: psi(x) - psi(2x), supported in 0.9 <= |x| <= 2, dyadic partition.
    tbump: unit-translation partition bump, supported in (-0.6, 0.6).
    chi_h/chi_v: transition in Lambda with supports |Lambda| <= 0.6 and >= 0.55.
    """

    def psi(self, x):
        return smoothstep((2.0 - np.abs(x)) / 0.2)

    def psi_tilde(self, x):
        # 1 on supp psi = [-2, 2], supported in [-2.2, 2.2]
        return smoothstep((2.2 - np.abs(x)) / 0.2)

    def ring(self, x):
        x = np.asarray(x, dtype=float)
        return self.psi(x) - self.psi(2.0 * x)

    def ring_tilde(self, x):
        # 1 on supp ring = [0.9, 2], supported in [0.7, 2.2]
        ax = np.abs(x)
        return smoothstep((2.2 - ax) / 0.2) * smoothstep((ax - 0.7) / 0.2)

    def tbump(self, x):
        # sum_j tbump(x - j) = 1 exactly: S(s) + S(1-s) = 1
        return smoothstep((0.6 - np.abs(x)) / 0.2)

    def chi_h(self, lam):
        return smoothstep((0.6 - np.abs(lam)) / 0.05)

    def chi_v(self, lam):
        return 1.0 - self.chi_h(lam)

    def chi_h_tilde(self, lam):
        return smoothstep((0.62 - np.abs(lam)) / 0.01)

    def chi_v_tilde(self, lam):
        return smoothstep((np.abs(lam) - 0.53) / 0.01)

    def chi_hq(self, lam, q):
        if q > -1:
            raise ValueError(f"angular parameter q must be <= -1, got {q}")
        if q == -1:
            return self.chi_h_leq(lam, -1) - self.chi_h_leq(lam, -2)
        return self.ring(2.0 ** (-q) * lam)

    def chi_h_leq(self, lam, q):
        if q > -1:
            raise ValueError(f"angular parameter q must be <= -1, got {q}")
        if q == -1:
            # 1 on supp chi_h, supported where chi_h_tilde = 1
            return smoothstep((0.61 - np.abs(lam)) / 0.01)
        return self.psi(2.0 ** (-q) * lam)

    def chi_vp(self, lam, p):
        if p > -1:
            raise ValueError(f"angular parameter p must be <= -1, got {p}")
        rho = np.sqrt(np.maximum(0.0, 1.0 - np.asarray(lam, dtype=float) ** 2))
        if p == -1:
            return self.chi_v_leq(lam, -1) - self.psi(4.0 * rho)
        return self.ring(2.0 ** (-p) * rho)

    def chi_v_leq(self, lam, p):
        if p > -1:
            raise ValueError(f"angular parameter p must be <= -1, got {p}")
        if p == -1:
            # 1 on supp chi_v, supported where chi_v_tilde = 1
            return smoothstep((np.abs(lam) - 0.54) / 0.01)
        rho = np.sqrt(np.maximum(0.0, 1.0 - np.asarray(lam, dtype=float) ** 2))
        return self.psi(2.0 ** (-p) * rho)


DEFAULT_BANK = CutoffBank()


# ---------------------------------------------------------------------------
# frequency projections


def _ring_arg(grid: Grid, flavor: str):
    return grid.xih_abs if flavor == "h" else np.broadcast_to(
        np.abs(grid.xi3), grid.shape
    )


def _resolvable(weight) -> bool:
    return bool(np.any(weight > 0))


def projection_weight(
    grid: Grid,
    flavor: str | None = None,
    k: int | None = None,
    q: int | None = None,
    p: int | None = None,
    tilde: bool = False,
    leq: bool = False,
    bank: CutoffBank = DEFAULT_BANK,
) -> np.ndarray:
    """Multiplier array for the P-family of frequency localizers.

    flavor None with k set gives the combined shell P_k = P^h_k + P^v_k.
    """
    lam = grid.lam
    if flavor is None:
        if k is None:
            raise ValueError("plain P_k projection requires k")
        w = projection_weight(grid, "h", k=k, tilde=tilde, bank=bank) + \
            projection_weight(grid, "v", k=k, tilde=tilde, bank=bank)
        return w
    if flavor not in ("h", "v"):
        raise ValueError(f"flavor must be 'h' or 'v', got {flavor!r}")

    if flavor == "h":
        ang = bank.chi_h_tilde(lam) if tilde else bank.chi_h(lam)
        if q is not None:
            ang = bank.chi_h_leq(lam, q) if leq else bank.chi_hq(lam, q)
        elif leq:
            raise ValueError("leq requires q (for 'h') or p (for 'v')")
    else:
        ang = bank.chi_v_tilde(lam) if tilde else bank.chi_v(lam)
        if p is not None:
            ang = bank.chi_v_leq(lam, p) if leq else bank.chi_vp(lam, p)
        elif leq:
            raise ValueError("leq requires q (for 'h') or p (for 'v')")

    if k is None:
        return np.broadcast_to(ang, grid.shape)
    r = _ring_arg(grid, flavor)
    shell = bank.ring_tilde(2.0 ** (-k) * r) if tilde else bank.ring(2.0 ** (-k) * r)
    return ang * shell


def project(
    f,
    flavor: str | None = None,
    k: int | None = None,
    q: int | None = None,
    p: int | None = None,
    tilde: bool = False,
    leq: bool = False,
    bank: CutoffBank = DEFAULT_BANK,
):
    """Apply a frequency localizer; unresolvable shells give a zero field."""

    def fn(sf):
        w = projection_weight(sf.grid, flavor, k=k, q=q, p=p, tilde=tilde, leq=leq, bank=bank)
        if k is not None and not _resolvable(w):
            warnings.warn(
                f"projection shell k={k} (flavor={flavor}) is unresolvable on {sf.grid}",
                UnresolvableLocalizationWarning,
                stacklevel=3,
            )
        return SpectralField(sf.grid, sf.coeffs * w)

    if isinstance(f, VectorField):
        return VectorField(tuple(fn(c) for c in f.components), f.divergence_free)
    return fn(f)


def shell_range(grid: Grid, flavor: str = "h", min_modes: int = 1):
    """Dyadic indices k whose shell carries at least min_modes lattice modes."""
    out = []
    kmin = int(np.floor(np.log2(1.0 / grid.L))) - 1
    kmax = int(np.ceil(np.log2(grid.n / grid.L))) + 1
    r = _ring_arg(grid, flavor)
    for k in range(kmin, kmax + 1):
        cnt = np.count_nonzero(DEFAULT_BANK.ring(2.0 ** (-k) * r) > 0)
        if cnt >= min_modes:
            out.append(k)
    return out


# ---------------------------------------------------------------------------
# physical localizers Z_l, H_l and variants


def zh_weight(
    grid: Grid,
    kind: str,
    l: int,
    k: int | None = None,
    bank: CutoffBank = DEFAULT_BANK,
) -> np.ndarray:
    """Physical-space weight for the Z/H family.

    kind: 'Z_l', 'H_l', 'Z_leq', 'H_leq', 'Z_l_mod_k', 'H_l_mod_k',
    'Z_l_plus', 'Z_l_minus'.  Modified versions follow the three-case rule:
    Z_l for l >= -k+1, Z_{<= -k} at l = -k, zero below.
    """
    ax3 = np.abs(np.broadcast_to(grid.x3, grid.shape))
    axh = np.sqrt(grid.x1**2 + grid.x2**2)
    axh = np.broadcast_to(axh, grid.shape)

    if kind in ("Z_l_mod_k", "H_l_mod_k"):
        if k is None:
            raise ValueError(f"{kind} requires the frequency parameter k")
        base = "Z" if kind[0] == "Z" else "H"
        if l <= -k - 1:
            return np.zeros(grid.shape)
        if l == -k:
            return zh_weight(grid, base + "_leq", l, bank=bank)
        kind = base + "_l"

    if kind == "Z_l":
        return bank.ring(2.0 ** (-l) * ax3)
    if kind == "H_l":
        return bank.ring(2.0 ** (-l) * axh)
    if kind == "Z_leq":
        return bank.psi(2.0 ** (-l) * ax3)
    if kind == "H_leq":
        return bank.psi(2.0 ** (-l) * axh)
    if kind in ("Z_l_plus", "Z_l_minus"):
        s = 1.0 if kind.endswith("plus") else -1.0
        ind = (s * np.broadcast_to(grid.x3, grid.shape)) > 0
        return bank.ring(2.0 ** (-l) * ax3) * ind
    raise ValueError(f"unknown spatial localizer kind {kind!r}")


def apply_physical_weight(f, w: np.ndarray):
    """Multiply a field by a physical-space weight (via transforms)."""

    def fn(sf):
        return transform(sf.grid, inverse_transform(sf) * w)

    if isinstance(f, VectorField):
        return VectorField(tuple(fn(c) for c in f.components), False)
    return fn(f)


def spatial_localize(f, kind: str, l: int, k: int | None = None, bank=DEFAULT_BANK):
    grid = f.grid if not isinstance(f, VectorField) else f.components[0].grid
    return apply_physical_weight(f, zh_weight(grid, kind, l, k=k, bank=bank))


def z_partition_range(grid: Grid):
    """l range over which sum_l Z_l = 1 holds at every off-plane grid point."""
    lmin = int(np.floor(np.log2(grid.dx))) - 2
    lmax = int(np.ceil(np.log2(np.pi * grid.L))) + 1
    return range(lmin, lmax + 1)


# ---------------------------------------------------------------------------
# ring localizers Q^J_j in ln|xi_h|


def ring_weight(grid: Grid, J: int, j: int, bank: CutoffBank = DEFAULT_BANK):
    if J < 0:
        raise ValueError(f"ring level J must be >= 0, got {J}")
    if abs(j) > 10 * 4**J:
        raise ValueError(f"ring index |j| <= 10*4^J violated: J={J}, j={j}")
    with np.errstate(divide="ignore"):
        lr = np.where(grid.xih_abs > 0, np.log(np.where(grid.xih_abs > 0, grid.xih_abs, 1.0)), -np.inf)
    w = np.where(np.isfinite(lr), bank.tbump(4.0**J * lr - j), 0.0)
    return np.broadcast_to(w, grid.shape)


def ring_localize(f, J: int, j: int, bank: CutoffBank = DEFAULT_BANK):
    """Q^J_j: multiplication by tbump(4^J ln|xi_h| - j) on the Fourier side."""

    def fn(sf):
        w = ring_weight(sf.grid, J, j, bank=bank)
        if not _resolvable(w):
            warnings.warn(
                f"ring Q^{J}_{j} is unresolvable on {sf.grid}",
                UnresolvableLocalizationWarning,
                stacklevel=3,
            )
        return SpectralField(sf.grid, sf.coeffs * w)

    if isinstance(f, VectorField):
        return VectorField(tuple(fn(c) for c in f.components), f.divergence_free)
    return fn(f)


def active_ring_indices(g: SpectralField, J: int, tol: float = 0.0):
    """Ring indices j whose Q^J_j mask meets the support of g."""
    grid = g.grid
    live = np.abs(g.coeffs) > tol
    if not live.any():
        return []
    rb = np.broadcast_to(grid.xih_abs, grid.shape)
    sel = (rb > 0) & live
    if not sel.any():
        return []
    lr = np.log(rb[sel])
    lo = int(np.floor(4.0**J * lr.min() - 0.6))
    hi = int(np.ceil(4.0**J * lr.max() + 0.6))
    cap = 10 * 4**J
    out = []
    for j in range(max(lo, -cap), min(hi, cap) + 1):
        w = ring_weight(grid, J, j)
        if np.any((w > 0) & live):
            out.append(j)
    return out


# ---------------------------------------------------------------------------
# multiscale telescoping decomposition of a bilinear form


@dataclass
class TelescopePiece:
    group: int  # 1: non-adjacent at J0, 2: per-level, 3: adjacent at Jmax
    J: int
    j1: int
    j2: int
    j1_coarse: int | None
    j2_coarse: int | None
    norm: float
    field: SpectralField | None = None


@dataclass
class TelescopeDecomposition:
    total: SpectralField
    pieces: list = field(default_factory=list)

    def group_sum(self, group: int) -> SpectralField:
        out = SpectralField.zeros(self.total.grid)
        for p in self.pieces:
            if p.group == group and p.field is not None:
                out = out + p.field
        return out


def _assert_lnrho_in_range(g: SpectralField, name: str):
    live = np.abs(g.coeffs) > 0
    onaxis = np.broadcast_to(g.grid.axis_mask, g.grid.shape) & live
    if onaxis.any():
        raise ValueError(f"telescope input {name} must vanish on the axis xi_h = 0")
    r = np.broadcast_to(g.grid.xih_abs, g.grid.shape)[live]
    if r.size and (np.abs(np.log(r)) > 9.9).any():
        raise ValueError(f"telescope input {name} has ln|xi_h| outside [-9.9, 9.9]")


def telescope(bilinear, g1: SpectralField, g2: SpectralField, J0: int, Jmax: int,
              keep_fields: bool = False, bank: CutoffBank = DEFAULT_BANK):
    """Exact multiscale decomposition of bilinear(g1, g2).

    Returns the three groups: non-adjacent ring pairs at the coarsest level
    J0, per-level refinement pieces for J0 < J <= Jmax (fine pairs j1, j2
    with |j1 - j2| > 1 under an adjacent coarse pair), and the adjacent
    remainder at Jmax.  Piece pruning uses the sharp refinement-overlap bound
    |j_fine - 4 j_coarse| <= 2, which keeps the identity exact: the sum of
    all pieces reproduces bilinear(g1, g2) to rounding.
    """
    if Jmax < J0:
        raise ValueError("Jmax must be >= J0")
    _assert_lnrho_in_range(g1, "g1")
    _assert_lnrho_in_range(g2, "g2")

    def Q(g, J, j):
        return ring_localize(g, J, j, bank=bank)

    pieces = []
    total = SpectralField.zeros(g1.grid)

    def emit(group, J, j1, j2, f1, f2, jc1=None, jc2=None):
        nonlocal total
        val = bilinear(f1, f2)
        total = total + val
        pieces.append(
            TelescopePiece(
                group, J, j1, j2, jc1, jc2, val.l2_norm(),
                val if keep_fields else None,
            )
        )

    a1 = active_ring_indices(g1, J0)
    a2 = active_ring_indices(g2, J0)
    # group 1: non-adjacent pairs at the coarsest level
    for j1 in a1:
        q1 = Q(g1, J0, j1)
        for j2 in a2:
            if abs(j1 - j2) > 1:
                emit(1, J0, j1, j2, q1, Q(g2, J0, j2))

    # group 2: refine each adjacent pair, peel off newly non-adjacent pieces
    c1, c2 = a1, a2
    for J in range(J0 + 1, Jmax + 1):
        f1, f2 = active_ring_indices(g1, J), active_ring_indices(g2, J)
        for jc1 in c1:
            for jc2 in c2:
                if abs(jc1 - jc2) > 1:
                    continue
                for j1 in f1:
                    if abs(j1 - 4 * jc1) > 2:
                        continue
                    q1 = Q(Q(g1, J - 1, jc1), J, j1)
                    for j2 in f2:
                        if abs(j2 - 4 * jc2) > 2 or abs(j1 - j2) <= 1:
                            continue
                        emit(2, J, j1, j2, q1, Q(Q(g2, J - 1, jc2), J, j2), jc1, jc2)
        c1, c2 = f1, f2

    # group 3: adjacent remainder at the finest level
    for j1 in c1:
        q1 = Q(g1, Jmax, j1)
        for j2 in c2:
            if abs(j1 - j2) <= 1:
                emit(3, Jmax, j1, j2, q1, Q(g2, Jmax, j2))

    return TelescopeDecomposition(total=total, pieces=pieces)


# ---------------------------------------------------------------------------
# traveling wave-packet sets


@dataclass
class WavePacketGeometry:
    """Cylinder / shell geometry attached to a ring Q^J_j and a dyadic time.

    The asymptotic regime requires 5 <= J <= floor(m*gamma/2); construction
    outside that range is allowed for desk-scale probing but flagged.
    """

    m: int
    J: int
    j: int
    C1: float = 20.0
    C2: float = 16.0
    alpha: float = 0.35
    gamma: float = 0.6

    def __post_init__(self):
        if abs(self.j) > 10 * 4**self.J:
            raise ValueError(f"|j| <= 10*4^J violated: J={self.J}, j={self.j}")
        jmax = math.floor(self.m * self.gamma / 2.0)
        if not (5 <= self.J <= jmax):
            warnings.warn(
                f"J={self.J} outside the asymptotic range [5, {jmax}] for m={self.m}",
                UserWarning,
                stacklevel=2,
            )

    @property
    def rho1(self) -> float:
        return math.exp(4.0 ** (-self.J) * (self.j - 0.7))

    @property
    def rho2(self) -> float:
        return math.exp(4.0 ** (-self.J) * (self.j + 0.7))

    def support_segment(self, t: float):
        """{-x3 = t/rho : ln rho in supp of the ring bump}, as an interval."""
        lo = t * math.exp(-(4.0 ** (-self.J)) * (self.j + 0.6))
        hi = t * math.exp(-(4.0 ** (-self.J)) * (self.j - 0.6))
        return lo, hi

    def in_cylinder(self, x, t: float) -> bool:
        xh = math.hypot(x[0], x[1])
        return (
            xh < self.C1 * t ** (1.0 - self.alpha)
            and self.C2 ** -1 * t < -x[2] < self.C2 * t
        )

    def distance(self, x, t: float) -> float:
        d1 = abs(x[2] + t / self.rho1)
        d2 = abs(x[2] + t / self.rho2)
        return 2.0 ** (-self.m + 2 * self.J) * min(d1, d2)

    def level(self, x, t: float):
        """B^J_j(l) classification; None when x is outside the cylinder."""
        if not self.in_cylinder(x, t):
            return None
        if t / self.rho2 < -x[2] < t / self.rho1:
            return 0
        d = self.distance(x, t)
        if d < 4.0:
            return 1
        return int(math.floor(math.log2(d)))


def wavepacket_sets(geometry: WavePacketGeometry, x, t: float) -> dict:
    """Membership record for a physical point: cylinder flag and B-level."""
    if not (2.0**geometry.m <= t < 2.0 ** (geometry.m + 1)):
        raise ValueError(f"t={t} outside the dyadic window of m={geometry.m}")
    level = geometry.level(x, t)
    return {
        "in_cylinder": geometry.in_cylinder(x, t),
        "level": level,
        "distance": geometry.distance(x, t),
    }


def wavepacket_level_grid(geom: WavePacketGeometry, grid: Grid, t: float):
    """B-level of every grid point (-1 outside the cylinder), vectorized."""
    x1 = np.broadcast_to(grid.x1, grid.shape)
    x2 = np.broadcast_to(grid.x2, grid.shape)
    x3 = np.broadcast_to(grid.x3, grid.shape)
    xh = np.hypot(x1, x2)
    in_cyl = (
        (xh < geom.C1 * t ** (1.0 - geom.alpha))
        & (-x3 > t / geom.C2)
        & (-x3 < geom.C2 * t)
    )
    b0 = (-x3 > t / geom.rho2) & (-x3 < t / geom.rho1)
    d = 2.0 ** (-geom.m + 2 * geom.J) * np.minimum(
        np.abs(x3 + t / geom.rho1), np.abs(x3 + t / geom.rho2)
    )
    with np.errstate(divide="ignore"):
        lvl_dyadic = np.floor(np.log2(np.where(d > 0, d, 1.0))).astype(int)
    lvl = np.where(b0, 0, np.where(d < 4.0, 1, lvl_dyadic))
    return np.where(in_cyl, lvl, -1)


# ---------------------------------------------------------------------------
# selector mini-language, e.g. "Pk:h:q=-3:k=0", "Z:l=4", "Q:J=5:j=12"


def apply_selector(f, selector: str, bank: CutoffBank = DEFAULT_BANK):
    head, *opts = selector.split(":")
    kv = {}
    flags = set()
    for o in opts:
        if "=" in o:
            key, val = o.split("=", 1)
            kv[key] = int(val)
        else:
            flags.add(o)
    flavor = "h" if "h" in flags else ("v" if "v" in flags else None)

    if head in ("P", "Pk"):
        if head == "Pk" and "k" not in kv:
            raise ValueError(f"selector {selector!r}: Pk requires k=<int>")
        return project(
            f,
            flavor,
            k=kv.get("k"),
            q=kv.get("q"),
            p=kv.get("p"),
            tilde="tilde" in flags,
            leq="leq" in flags,
            bank=bank,
        )
    if head in ("Z", "H"):
        if "l" not in kv:
            raise ValueError(f"selector {selector!r}: {head} requires l=<int>")
        kind = head + "_l"
        if "leq" in flags:
            kind = head + "_leq"
        elif "k" in kv:
            kind = head + "_l_mod_k"
        elif "plus" in flags:
            kind = head + "_l_plus"
        elif "minus" in flags:
            kind = head + "_l_minus"
        return spatial_localize(f, kind, kv["l"], k=kv.get("k"), bank=bank)
    if head == "Q":
        if "J" not in kv or "j" not in kv:
            raise ValueError(f"selector {selector!r}: Q requires J=<int>:j=<int>")
        return ring_localize(f, kv["J"], kv["j"], bank=bank)
    raise ValueError(f"unknown selector head {head!r} in {selector!r}")
