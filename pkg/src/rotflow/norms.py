"""Energy norms, bootstrap X/Y norms, decay fitting and trajectory monitors.

The X norm takes a supremum of weighted L2 masses over dyadic localizations
in frequency (horizontal shells) and in the vertical coordinate; the Y norm
mirrors it with vertical shells and horizontal localization.  The scaling
vector field S = x . grad and the rotation Omega (Lie derivative variant on
vectors) use centered torus coordinates, which is faithful only while the
field's mass stays away from the box boundary; callers get a warning when
that precondition degrades.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .localization import DEFAULT_BANK, projection_weight, shell_range, zh_weight
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    inverse_transform,
    transform,
)

__all__ = [
    "NormSpec",
    "DecayFit",
    "norm",
    "x_norm",
    "y_norm",
    "x_norm_detail",
    "sobolev_norm",
    "sup_norm",
    "weighted_norm",
    "s_omega_energy",
    "s_derivative",
    "omega_derivative",
    "linf_control_check",
    "decay_fit",
    "recurrence_time",
    "energy_inequality_monitor",
    "scattering_residual_series",
    "interior_mass_fraction",
    "UnreliableNormWarning",
]


class UnreliableNormWarning(UserWarning):
    """Coordinate-weighted norm evaluated on data leaking to the boundary."""


@dataclass(frozen=True)
class NormSpec:
    kind: str  # Hn | S_Omega_energy | X | Y | weighted | sup
    n: int = 0
    n1: int = 0
    n2: int = 0
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.n1 < 0 or self.n2 < 0 or self.n < 0:
            raise ValueError("orders must be nonnegative integers")


@dataclass
class DecayFit:
    window: tuple
    exponent: float
    constant: float
    residual: float
    recurrence_time: float = np.inf
    n_samples: int = 0


# ---------------------------------------------------------------------------
# vector fields S and Omega on the torus (centered coordinates)


def _phys(f: SpectralField):
    return inverse_transform(f)


def interior_mass_fraction(f, margin: float = 0.05) -> float:
    """Fraction of L2 mass inside the inner (1 - 2*margin) cube."""
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    half = np.pi * g.L * (1.0 - 2.0 * margin)
    inside = (
        (np.abs(g.x1) <= half) & (np.abs(g.x2) <= half) & (np.abs(g.x3) <= half)
    )
    tot = 0.0
    located = 0.0
    for c in comps:
        p = np.abs(_phys(c)) ** 2
        tot += float(p.sum())
        located += float(p[np.broadcast_to(inside, p.shape)].sum())
    return located / tot if tot > 0 else 1.0


def _warn_if_boundary_mass(f, what: str):
    frac = interior_mass_fraction(f)
    if frac < 1.0 - 1e-8:
        warnings.warn(
            f"{what}: only {frac:.9f} of the L2 mass is inside the inner 90% box; "
            "coordinate-weighted result is unreliable",
            UnreliableNormWarning,
            stacklevel=3,
        )


def s_derivative(f):
    """S f = x . grad f, computed spectrally with centered coordinates."""

    def fn(sf):
        g = sf.grid
        out = np.zeros(g.shape, dtype=np.complex128)
        for xi_ax, x_ax in ((g.xi1, g.x1), (g.xi2, g.x2), (g.xi3, g.x3)):
            out += x_ax * inverse_transform(SpectralField(g, 1j * xi_ax * sf.coeffs))
        return transform(g, out)

    if isinstance(f, VectorField):
        return VectorField(tuple(fn(c) for c in f.components), False)
    return fn(f)


def omega_derivative(f, vector: bool | None = None):
    """Omega f = x_h^perp . grad_h f on scalars; the Lie derivative
    Omega f - f_h^perp on vector fields."""

    def om(sf):
        g = sf.grid
        d1 = inverse_transform(SpectralField(g, 1j * g.xi1 * sf.coeffs))
        d2 = inverse_transform(SpectralField(g, 1j * g.xi2 * sf.coeffs))
        return transform(g, -g.x2 * d1 + g.x1 * d2)

    if isinstance(f, VectorField):
        if vector is None:
            vector = True
        c1, c2, c3 = f.components
        o1, o2, o3 = om(c1), om(c2), om(c3)
        if vector:
            # subtract f_h^perp = (-f2, f1, 0)
            o1 = o1 + c2
            o2 = o2 - c1
        return VectorField((o1, o2, o3), False)
    return om(f)


def _apply_s_omega(f, a: int, b: int, vector_omega: bool):
    out = f
    for _ in range(b):
        out = omega_derivative(out, vector=vector_omega if isinstance(out, VectorField) else None)
    for _ in range(a):
        out = s_derivative(out)
    return out


# ---------------------------------------------------------------------------
# basic norms


def sobolev_norm(f, n: int) -> float:
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    w = (1.0 + g.xi_sq) ** n
    tot = 0.0
    for c in comps:
        tot += float(np.sum(w * np.abs(c.coeffs) ** 2))
    return float(np.sqrt(tot * (2.0 * np.pi * g.L) ** -3))


def sup_norm(f) -> float:
    if isinstance(f, VectorField):
        mags = sum(np.abs(_phys(c)) ** 2 for c in f.components)
        return float(np.sqrt(mags.max()))
    return float(np.abs(_phys(f)).max())


def weighted_norm(f, beta: float) -> float:
    """|| <|x|>^{1+beta} f ||_{L2} with centered coordinates."""
    _warn_if_boundary_mass(f, "weighted norm")
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    r2 = g.x1**2 + g.x2**2 + g.x3**2
    w = (1.0 + r2) ** (1.0 + beta)  # <|x|>^{2(1+beta)}
    tot = 0.0
    for c in comps:
        tot += float(np.sum(w * np.abs(_phys(c)) ** 2))
    return float(np.sqrt(tot * g.dx**3))


def s_omega_energy(f, n2: int) -> float:
    """sum_{a+b <= n2} ||S^a Omega^b f||_{L2} (Lie-derivative Omega on vectors)."""
    _warn_if_boundary_mass(f, "S/Omega energy")
    tot = 0.0
    for a in range(n2 + 1):
        for b in range(n2 + 1 - a):
            tot += _apply_s_omega(f, a, b, vector_omega=True).l2_norm()
    return float(tot)


# ---------------------------------------------------------------------------
# X and Y norms


def _xy_norm_scalar_detail(f: SpectralField, flavor: str, n1, n2, beta, bank):
    """Entries (k, l, a, b, weighted value) for sup over the discrete ranges."""
    g = f.grid
    entries = []
    lmax = int(np.ceil(np.log2(np.pi * g.L)))
    dx3 = g.dx**3
    kind_mod = "Z_l_mod_k" if flavor == "h" else "H_l_mod_k"
    for k in shell_range(g, flavor, min_modes=8):
        w = projection_weight(g, flavor, k=k, bank=bank)
        pk = SpectralField(g, f.coeffs * w)
        if not np.any(pk.coeffs):
            continue
        for a in range(n2 + 1):
            for b in range(n2 + 1 - a):
                loc = _apply_s_omega(pk, a, b, vector_omega=False)
                phys = np.abs(_phys(loc)) ** 2
                for l in range(-k, lmax + 1):
                    zw = zh_weight(g, kind_mod, l, k=k, bank=bank)
                    val = float(np.sqrt(np.sum(zw**2 * phys) * dx3))
                    wt = 2.0 ** (n1 * max(k, 0) + (1.0 + beta) * (l + k))
                    entries.append((k, l, a, b, wt * val))
    return entries


def x_norm_detail(f, n1=0, n2=0, beta=0.0, bank=DEFAULT_BANK, flavor="h"):
    comps = f.components if isinstance(f, VectorField) else (f,)
    per_comp = [
        _xy_norm_scalar_detail(c, flavor, n1, n2, beta, bank) for c in comps
    ]
    return per_comp


def _xy_norm(f, flavor, n1, n2, beta, bank):
    nontrivial = any(
        a + b > 0 for a in range(n2 + 1) for b in range(n2 + 1 - a)
    )
    if nontrivial:
        _warn_if_boundary_mass(f, f"{'X' if flavor == 'h' else 'Y'} norm")
    total = 0.0
    for entries in x_norm_detail(f, n1, n2, beta, bank, flavor):
        total += max((e[-1] for e in entries), default=0.0)
    return float(total)


def x_norm(f, n1=0, n2=0, beta=0.0, bank=DEFAULT_BANK) -> float:
    """sup_{k,l} sup_{a+b<=n2} 2^{n1 k+ + (1+beta)(l+k)} ||Z_l^(k) S^a Om^b P^h_k f||.

    Vector fields contribute the sum of their component norms.
    """
    return _xy_norm(f, "h", n1, n2, beta, bank)


def y_norm(f, n1=0, n2=0, beta=0.0, bank=DEFAULT_BANK) -> float:
    return _xy_norm(f, "v", n1, n2, beta, bank)


def norm(f, spec: NormSpec) -> float:
    """Dispatch on a NormSpec."""
    if spec.kind == "Hn":
        return sobolev_norm(f, spec.n)
    if spec.kind == "sup":
        return sup_norm(f)
    if spec.kind == "weighted":
        return weighted_norm(f, spec.beta)
    if spec.kind == "S_Omega_energy":
        return s_omega_energy(f, spec.n2)
    if spec.kind == "X":
        return x_norm(f, spec.n1, spec.n2, spec.beta)
    if spec.kind == "Y":
        return y_norm(f, spec.n1, spec.n2, spec.beta)
    raise ValueError(f"unknown norm kind {spec.kind!r}")


def linf_control_check(f, bank=DEFAULT_BANK) -> dict:
    """Per-shell ratios ||chi^h_k f_hat||_inf * 2^{3k/2} / ||f||_{X^{0,2}_0}.

    The sup of f_hat on each horizontal shell is controlled by the X norm;
    the returned record carries the per-k ratios and their max (the fitted
    constant).
    """
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    xref = x_norm(f, n1=0, n2=2, beta=0.0, bank=bank)
    ratios = {}
    for k in shell_range(g, "h", min_modes=8):
        w = projection_weight(g, "h", k=k, bank=bank)
        m = 0.0
        for c in comps:
            m = max(m, float(np.abs(w * c.coeffs).max()))
        if m == 0.0:
            continue
        ratios[k] = m * 2.0 ** (1.5 * k) / xref if xref > 0 else np.inf
    return {
        "x_norm": xref,
        "ratios": ratios,
        "max_ratio": max(ratios.values(), default=0.0),
    }


# ---------------------------------------------------------------------------
# decay fitting and trajectory monitors


def decay_fit(times, values, recurrence=np.inf, window=None, min_samples=8) -> DecayFit:
    """Least-squares slope of log(value) against log(t).

    The fit window is clipped at recurrence/2; at least min_samples samples
    must survive (and be positive).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    t0 = window[0] if window else t.min()
    t1 = window[1] if window else t.max()
    t1 = min(t1, recurrence / 2.0)
    keep = (t >= t0) & (t <= t1) & (v > 0) & (t > 0)
    if keep.sum() < min_samples:
        raise ValueError(
            f"decay window [{t0}, {t1}] retains {int(keep.sum())} samples; "
            f"need >= {min_samples}"
        )
    lt, lv = np.log(t[keep]), np.log(v[keep])
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lt + intercept)) ** 2)))
    return DecayFit(
        window=(float(t[keep].min()), float(t[keep].max())),
        exponent=float(slope),
        constant=float(np.exp(intercept)),
        residual=resid,
        recurrence_time=float(recurrence),
        n_samples=int(keep.sum()),
    )


def recurrence_time(f, energy_tail: float = 1e-4) -> float:
    """Wrap-around horizon 2 pi L / v_eff from the group speed |xi_h|/|xi|^2.

    v_eff is the smallest speed such that modes moving faster carry at most
    energy_tail of the total L2 mass.
    """
    comps = f.components if isinstance(f, VectorField) else (f,)
    g = comps[0].grid
    speed = np.where(
        g.xi_abs > 0, g.xih_abs / np.where(g.xi_sq == 0, 1.0, g.xi_sq), 0.0
    )
    speed = np.broadcast_to(speed, g.shape).ravel()
    en = sum(np.abs(c.coeffs) ** 2 for c in comps).ravel()
    tot = en.sum()
    if tot == 0:
        return np.inf
    order = np.argsort(speed)[::-1]
    csum = np.cumsum(en[order])
    idx = np.searchsorted(csum, energy_tail * tot)
    v_eff = speed[order][min(idx, len(order) - 1)]
    if v_eff <= 0:
        return np.inf
    return float(2.0 * np.pi * g.L / v_eff)


def _fd_midpoint(times, series):
    t = np.asarray(times, dtype=float)
    s = np.asarray(series, dtype=float)
    dt = np.diff(t)
    d = np.diff(s) / dt
    mid = 0.5 * (s[1:] + s[:-1])
    return 0.5 * (t[1:] + t[:-1]), d, mid


def energy_inequality_monitor(traj) -> dict:
    """Fit the smallest constants C with d/dt E <= C * driver * E along a run.

    Expects a trajectory with time series 'hn_energy_sq', 'grad_sup',
    and optionally 's_energy_sq'/'s_driver', 'omega_energy_sq'/'omega_driver',
    'weighted_sq'/'weighted_driver' (see solver monitors).
    """
    out = {}
    series = traj.series if hasattr(traj, "series") else traj
    times = series["time"]

    def fit(name, energy_key, driver_key):
        if energy_key not in series or driver_key not in series:
            return
        e = np.asarray(series[energy_key], dtype=float)
        drv = np.asarray(series[driver_key], dtype=float)
        tm, dedt, emid = _fd_midpoint(times, e)
        dmid = 0.5 * (drv[1:] + drv[:-1])
        denom = dmid * emid
        ok = denom > 0
        if not ok.any():
            out[name] = {"fitted_C": 0.0, "n_intervals": 0}
            return
        c = np.max(dedt[ok] / denom[ok])
        out[name] = {
            "fitted_C": float(max(c, 0.0)),
            "max_relative_growth": float(np.max(dedt[ok] / emid[ok])),
            "n_intervals": int(ok.sum()),
        }

    fit("hn", "hn_energy_sq", "grad_sup")
    fit("s_energy", "s_energy_sq", "s_driver")
    fit("omega_energy", "omega_energy_sq", "omega_driver")
    fit("weighted", "weighted_sq", "weighted_driver")
    return out


def scattering_residual_series(times, residuals, dtf_times=None, dtf_norms=None,
                               recurrence=np.inf):
    """Package checkpoint residuals ||f(t+gap) - f(t)|| and the companion
    fit of ||d/dt f||_{L2} decay."""
    rec = {
        "checkpoint_times": list(map(float, times)),
        "residuals": list(map(float, residuals)),
        "monotone_decreasing": bool(
            all(b < a for a, b in zip(residuals, residuals[1:]))
        ),
    }
    if dtf_times is not None and dtf_norms is not None:
        try:
            fitted = decay_fit(
                dtf_times, dtf_norms, recurrence=recurrence, min_samples=6
            )
            rec["dtf_exponent"] = fitted.exponent
            rec["dtf_fit"] = fitted
        except ValueError:
            rec["dtf_exponent"] = None
    return rec
