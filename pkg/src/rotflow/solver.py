"""Time integration of the rotating Euler system.

Two formulations: the velocity form (advection + Coriolis under classic
RK4) and the profile form (helical profiles under Lawson-RK4, where the
linear rotation is carried exactly by the semigroup inside the bilinear
term, so a linear run leaves the profile identically constant).
Divergence-freeness is maintained by Leray projection inside every stage.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import norms as norms_mod
from .profiles import (
    VectorProfile,
    reconstruct_velocity,
    rhs_profile,
    rhs_velocity,
)
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    curl,
    dealias,
    helical_split,
    inverse_transform,
    leray_project,
    save_snapshot,
    semigroup,
    transform,
    _reverse_modes,
)

__all__ = [
    "SolverConfig",
    "InitialData",
    "TrajectoryRecord",
    "make_initial_data",
    "step",
    "run",
]


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    formulation: str = "profile"  # profile | velocity
    integrator: str = "rk4_lawson"  # rk4_lawson | rk4_plain
    dealias: bool = True
    snapshot_stride: int = 10
    seed: int = 0
    linear: bool = False  # drop the advection term (Coriolis only)
    t_start: float = 0.0
    checkpoint_gap: float = 0.0  # spacing of profile checkpoints (0: off)
    track_norms: tuple = ()  # extra NormSpec entries per sample
    monitor_energies: bool = False  # S/Omega/weighted inequality drivers
    energy_order: int = 2
    output_dir: str | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= self.t_start:
            raise ValueError("need dt > 0 and t_end > t_start")
        if self.formulation not in ("profile", "velocity"):
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.integrator not in ("rk4_lawson", "rk4_plain"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    def check_cfl(self, grid: Grid, sup_u: float):
        ximax = math.sqrt(3.0) * (grid.n / 2) / grid.L
        cfl = self.dt * ximax * sup_u
        if cfl > 0.5:
            raise ValueError(
                f"advective CFL violated: dt*|xi|max*sup|u| = {cfl:.3g} > 0.5"
            )
        return cfl


@dataclass
class InitialData:
    kind: str = "gaussian_smalldata"  # gaussian_smalldata | beltrami | random_bandlimited
    amplitude: float = 0.01
    width: float | tuple | None = None  # envelope scale(s); defaults to L/8
    band: tuple = (0.0, np.inf)  # retained |xi| range
    band_taper: float = 0.0  # relative smooth-taper width at the band edges
    modulation: tuple | None = None  # carrier wavevector for the envelope
    shells: tuple = (1, 2)  # beltrami shells (multiples of 1/L)
    seed: int = 0


@dataclass
class TrajectoryRecord:
    series: dict = field(default_factory=dict)
    checkpoints: list = field(default_factory=list)  # (t, residual-vs-previous)
    summary: dict = field(default_factory=dict)

    def to_csv(self, path):
        keys = list(self.series.keys())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for row in zip(*(self.series[k] for k in keys)):
                w.writerow([f"{v:.12g}" for v in row])
            fits = self.summary.get("fitted_exponents", {})
            w.writerow(
                ["fit:" + ",".join(f"{k}={v:.4f}" for k, v in fits.items())]
                + [""] * (len(keys) - 1)
            )

    def to_json(self, path):
        def default(o):
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            if isinstance(o, np.ndarray):
                return o.tolist()
            if hasattr(o, "__dict__"):
                return o.__dict__
            return str(o)

        with open(path, "w") as fh:
            json.dump(
                {"series": self.series, "summary": self.summary},
                fh,
                indent=2,
                default=default,
            )


# ---------------------------------------------------------------------------
# initial data


def _hermitize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(_reverse_modes(c)))


def _band_mask(grid: Grid, lo: float, hi: float, taper: float = 0.0):
    """Band selector in |xi|; taper > 0 gives smooth edges (no Gibbs tails)."""
    if taper <= 0.0:
        return ((grid.xi_abs >= lo) & (grid.xi_abs <= hi)).astype(float)
    from .localization import smoothstep

    w = np.ones_like(grid.xi_abs)
    if lo > 0:
        w = w * smoothstep((grid.xi_abs - lo) / (taper * lo))
    if np.isfinite(hi):
        w = w * smoothstep((hi - grid.xi_abs) / (taper * hi))
    return w


def make_initial_data(grid: Grid, init: InitialData) -> VectorField:
    """Divergence-free, mean-free, dealiased velocity snapshot at t = 0."""
    L = grid.L
    if init.kind == "beltrami":
        x1, x2, x3 = grid.x1, grid.x2, grid.x3
        amps = [init.amplitude * (0.7**i) for i in range(len(init.shells))]
        comps = [np.zeros(grid.shape, dtype=float) for _ in range(3)]
        for a, s in zip(amps, init.shells):
            k = s / L
            comps[0] += a * (np.sin(k * x3) + np.cos(k * x2))
            comps[1] += a * (np.sin(k * x1) + np.cos(k * x3))
            comps[2] += a * (np.sin(k * x2) + np.cos(k * x1))
        u = VectorField(
            tuple(transform(grid, np.broadcast_to(c, grid.shape))
                  for c in comps),
        )
    elif init.kind == "gaussian_smalldata":
        sigma = init.width if init.width is not None else L / 8.0
        s1, s2, s3 = sigma if isinstance(sigma, tuple) else (sigma,) * 3
        x1, x2, x3 = grid.x1, grid.x2, grid.x3
        env = np.exp(
            -(x1**2 / s1**2 + x2**2 / s2**2 + x3**2 / s3**2) / 2.0
        )
        if init.modulation is not None:
            k0 = np.asarray(init.modulation, dtype=float)
            carrier = np.cos(k0[0] * x1 + k0[1] * x2 + k0[2] * x3)
            e = np.array([0.0, 1.0, 0.0])
            k0n = np.linalg.norm(k0)
            if k0n > 0:
                e = e - (e @ k0) / k0n**2 * k0
                if np.linalg.norm(e) < 0.1:
                    e = np.array([1.0, 0.0, 0.0])
                    e = e - (e @ k0) / k0n**2 * k0
                e = e / np.linalg.norm(e)
            pot = [env * carrier * ei for ei in e]
        else:
            pot = [env, 0.3 * env, -0.5 * env]
        a = VectorField(
            tuple(transform(grid, np.broadcast_to(p, grid.shape) + 0j) for p in pot)
        )
        u = curl(a)  # divergence-free and mean-free by construction
    elif init.kind == "random_bandlimited":
        rng = np.random.default_rng(init.seed)
        comps = []
        for _ in range(3):
            c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
            comps.append(_hermitize(c))
        u = VectorField.from_coeffs(grid, *comps)
    else:
        raise ValueError(f"unknown initial data kind {init.kind!r}")

    lo, hi = init.band
    mask = _band_mask(grid, lo, hi, init.band_taper)
    comps = []
    for c in u.components:
        cc = mask * c.coeffs
        cc[0, 0, 0] = 0.0  # zero mode pinned
        comps.append(cc)
    u = VectorField.from_coeffs(grid, *comps)
    u = dealias(leray_project(u))
    s = norms_mod.sup_norm(u)
    if s > 0:
        u = u * (init.amplitude / s)
    u.divergence_free = True
    return u


# ---------------------------------------------------------------------------
# stepping


def _rhs_velocity_full(u: VectorField, cfg: SolverConfig) -> VectorField:
    if cfg.linear:
        g = u.grid
        c1, c2, c3 = (c.coeffs for c in u.components)
        cor = VectorField.from_coeffs(g, -c2, c1, np.zeros_like(c3))
        return leray_project(-1.0 * cor)
    return rhs_velocity(u, apply_dealias=cfg.dealias)


def _rhs_profile_full(p: VectorProfile, cfg: SolverConfig):
    if cfg.linear:
        z = VectorField.zeros(p.grid)
        return z, z.copy()
    return rhs_profile(p, apply_dealias=cfg.dealias)


def step(state, cfg: SolverConfig):
    """One RK4 step; state is a VectorProfile or a (t, VectorField) pair."""
    dt = cfg.dt
    if cfg.formulation == "profile":
        p: VectorProfile = state
        t = p.time

        def f(tt, plus, minus):
            return _rhs_profile_full(VectorProfile(plus, minus, tt), cfg)

        k1p, k1m = f(t, p.plus, p.minus)
        k2p, k2m = f(t + dt / 2, p.plus + (dt / 2) * k1p, p.minus + (dt / 2) * k1m)
        k3p, k3m = f(t + dt / 2, p.plus + (dt / 2) * k2p, p.minus + (dt / 2) * k2m)
        k4p, k4m = f(t + dt, p.plus + dt * k3p, p.minus + dt * k3m)
        plus = p.plus + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        minus = p.minus + (dt / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        plus.divergence_free = minus.divergence_free = True
        return VectorProfile(plus, minus, t + dt)

    t, u = state

    def f(tt, uu):
        return _rhs_velocity_full(uu, cfg)

    k1 = f(t, u)
    k2 = f(t + dt / 2, u + (dt / 2) * k1)
    k3 = f(t + dt / 2, u + (dt / 2) * k2)
    k4 = f(t + dt, u + dt * k3)
    out = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = leray_project(out)
    return (t + dt, out)


def _finite(u: VectorField) -> bool:
    return all(np.isfinite(c.coeffs).all() for c in u.components)


def _grad_sup(u: VectorField) -> float:
    g = u.grid
    out = 0.0
    for c in u.components:
        for xi_ax in (g.xi1, g.xi2, g.xi3):
            d = inverse_transform(SpectralField(g, 1j * xi_ax * c.coeffs))
            out = max(out, float(np.abs(d).max()))
    return out


def _helicity(u: VectorField) -> float:
    w = curl(u)
    g = u.grid
    scale = (2.0 * np.pi * g.L) ** -3
    tot = 0.0
    for cu, cw in zip(u.components, w.components):
        tot += float(np.sum(cu.coeffs * np.conj(cw.coeffs)).real)
    return scale * tot


def run(cfg: SolverConfig, initial: VectorField) -> TrajectoryRecord:
    """Integrate and record monitors; abort on NaN or gradient blow-up."""
    grid = initial.grid
    sup0 = norms_mod.sup_norm(initial)
    cfg.check_cfl(grid, sup0)
    grad0 = _grad_sup(initial)

    u_plus, u_minus = helical_split(initial)
    if cfg.formulation == "profile":
        state = VectorProfile(u_plus, u_minus, cfg.t_start)
    else:
        state = (cfg.t_start, initial.copy())

    rec = TrajectoryRecord()
    s = rec.series
    for key in (
        "time", "l2_energy", "h4_energy", "sup_u", "div_residual",
        "helicity", "dtf_l2", "hn_energy_sq", "grad_sup",
    ):
        s[key] = []
    if cfg.monitor_energies:
        for key in (
            "s_energy_sq", "s_driver", "omega_energy_sq", "omega_driver",
            "weighted_sq", "weighted_driver",
        ):
            s[key] = []
    for spec in cfg.track_norms:
        s[f"norm_{spec.kind}_{spec.n1}_{spec.n2}_{spec.beta}"] = []

    rec.summary["recurrence_time"] = norms_mod.recurrence_time(initial)
    rec.summary["initial_sup"] = sup0

    last_checkpoint = None
    checkpoint_times, checkpoint_resid = [], []

    def current_fields():
        if cfg.formulation == "profile":
            p = state
            return p.time, reconstruct_velocity(p), p
        t, u = state
        up, um = helical_split(u)
        return t, u, VectorProfile(
            semigroup(up, t, -1), semigroup(um, t, +1), t
        )

    def sample():
        nonlocal last_checkpoint
        t, u, p = current_fields()
        s["time"].append(t)
        s["l2_energy"].append(u.l2_norm())
        s["h4_energy"].append(norms_mod.sobolev_norm(u, 4))
        s["sup_u"].append(norms_mod.sup_norm(u))
        s["div_residual"].append(u.divergence_defect())
        s["helicity"].append(_helicity(u))
        dp, dm = _rhs_profile_full(p, cfg)
        s["dtf_l2"].append(
            math.sqrt(dp.l2_norm() ** 2 + dm.l2_norm() ** 2)
        )
        s["hn_energy_sq"].append(norms_mod.sobolev_norm(u, cfg.energy_order) ** 2)
        s["grad_sup"].append(_grad_sup(u))
        if cfg.monitor_energies:
            n = cfg.energy_order
            s_terms = [norms_mod.s_derivative(u)]
            for _ in range(n - 1):
                s_terms.append(norms_mod.s_derivative(s_terms[-1]))
            o_terms = [norms_mod.omega_derivative(u)]
            for _ in range(n - 1):
                o_terms.append(norms_mod.omega_derivative(o_terms[-1]))
            base = norms_mod.sobolev_norm(u, n) + sum(
                v.l2_norm() for v in s_terms
            )
            s["s_energy_sq"].append(s_terms[-1].l2_norm() ** 2)
            s["s_driver"].append(
                (norms_mod.sup_norm(s_terms[0]) + s["grad_sup"][-1]) * base**2
                / max(s["s_energy_sq"][-1], 1e-300)
            )
            baseo = norms_mod.sobolev_norm(u, n) + sum(
                v.l2_norm() for v in o_terms
            )
            s["omega_energy_sq"].append(o_terms[-1].l2_norm() ** 2)
            s["omega_driver"].append(
                (norms_mod.sup_norm(o_terms[0]) + s["grad_sup"][-1]) * baseo**2
                / max(s["omega_energy_sq"][-1], 1e-300)
            )
            s["weighted_sq"].append(norms_mod.weighted_norm(u, 0.01) ** 2)
            s["weighted_driver"].append(1.0 + s["sup_u"][-1])
        for spec in cfg.track_norms:
            key = f"norm_{spec.kind}_{spec.n1}_{spec.n2}_{spec.beta}"
            s[key].append(norms_mod.norm(p.plus if spec.kind in ("X", "Y") else u, spec))
        if cfg.checkpoint_gap > 0:
            if last_checkpoint is None or t - last_checkpoint[0] >= cfg.checkpoint_gap - 1e-9:
                if last_checkpoint is not None:
                    d = math.sqrt(
                        (p.plus - last_checkpoint[1].plus).l2_norm() ** 2
                        + (p.minus - last_checkpoint[1].minus).l2_norm() ** 2
                    )
                    checkpoint_times.append(t)
                    checkpoint_resid.append(d)
                last_checkpoint = (t, p.copy())
        if cfg.output_dir and cfg.snapshot_stride > 0:
            idx = len(s["time"]) - 1
            save_snapshot(
                os.path.join(cfg.output_dir, f"u_{idx:05d}.snap"),
                u,
                kind="velocity",
                time=t,
            )
        return u

    n_steps = int(round((cfg.t_end - cfg.t_start) / cfg.dt))
    sample()
    for i in range(n_steps):
        state = step(state, cfg)
        if (i + 1) % cfg.snapshot_stride == 0 or i == n_steps - 1:
            u = sample()
            if not _finite(u):
                rec.summary["aborted"] = "non-finite state"
                break
            if _grad_sup(u) > 1e3 * max(grad0, 1e-300):
                rec.summary["aborted"] = "gradient blow-up indicator"
                break

    rec.checkpoints = list(zip(checkpoint_times, checkpoint_resid))
    e0 = s["l2_energy"][0]
    rec.summary["l2_drift"] = (
        max(abs(e - e0) for e in s["l2_energy"]) / e0 if e0 > 0 else 0.0
    )
    rec.summary["max_div_residual"] = max(s["div_residual"])
    rec.summary["fitted_exponents"] = {}
    if len(s["time"]) >= 8 and min(s["sup_u"]) > 0:
        try:
            fit = norms_mod.decay_fit(
                s["time"], s["sup_u"],
                recurrence=rec.summary["recurrence_time"],
                window=(max(cfg.t_start, 1e-9) + 1.0, cfg.t_end),
            )
            rec.summary["fitted_exponents"]["sup_u"] = fit.exponent
        except ValueError:
            pass
        try:
            fit = norms_mod.decay_fit(
                s["time"], s["dtf_l2"],
                recurrence=rec.summary["recurrence_time"],
                window=(max(cfg.t_start, 1e-9) + 1.0, cfg.t_end),
            )
            rec.summary["fitted_exponents"]["dtf_l2"] = fit.exponent
        except ValueError:
            pass
    return rec
