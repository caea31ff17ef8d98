"""Mean-field limit as an age-structured renewal PDE coupled to the activity.

    d_t f + d_x f + a(x, M(t)) f = 0,      f(t, 0) = N(t) = int a(x, M(t)) f(t, x) dx
    M' = -alpha M + alpha eps (b * N)(t)

The transport is first-order upwind with exact exponential absorption; the
absorbed mass is re-injected in the first cell in the same step, so mass is
conserved up to rounding.  The activity path is found by Picard iteration:
given ``M`` solve the linear PDE, compute the spiking rate, integrate the
activity ODE with an exponential integrator, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import delays as delays_mod
from . import intensity as intensity_mod
from . import laws


class CFLError(ValueError):
    pass


class GridError(ValueError):
    pass


class PicardError(RuntimeError):
    def __init__(self, msg, residuals):
        super().__init__(msg)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class MeanFieldConfig:
    alpha: float
    epsilon: float
    horizon: float
    g0: laws.Law
    m0: float
    intensity: intensity_mod.IntensityModel
    delay: delays_mod.DelayModel = delays_mod.Dirac(0.0)
    instantaneous: bool = False

    @classmethod
    def from_network(cls, cfg, m0: Optional[float] = None, instantaneous=False):
        if m0 is None:
            if cfg.pin_m0 is not None:
                m0 = cfg.pin_m0
            elif isinstance(cfg.m0, laws.Dirac):
                m0 = cfg.m0.value
            else:
                raise GridError("mean-field solve needs a deterministic M0 (Dirac m0 or a pinned value)")
        return cls(cfg.alpha, cfg.epsilon, cfg.horizon, cfg.g0, float(m0), cfg.intensity, cfg.delay, instantaneous)


@dataclass(frozen=True)
class PDEGrid:
    dx: float = 1e-3
    dt: Optional[float] = None  # defaults to dx (CFL number 1)
    x_max: Optional[float] = None
    picard_tol: float = 1e-10
    max_iters: int = 200
    damping: float = 1.0
    density_rows: int = 101

    def __post_init__(self):
        if not self.dx > 0:
            raise GridError("dx must be > 0")
        if self.dt is not None and not self.dt > 0:
            raise GridError("dt must be > 0")
        if not 0 < self.damping <= 1:
            raise GridError("damping must lie in (0, 1]")
        if self.max_iters < 1:
            raise GridError("max_iters must be >= 1")


@dataclass
class MeanFieldSolution:
    x_grid: np.ndarray
    t_grid: np.ndarray
    density: np.ndarray           # rows at density_times
    density_times: np.ndarray
    activity: np.ndarray          # M(t) on t_grid
    forced: np.ndarray            # M(t) - M0 exp(-alpha t) on t_grid
    boundary_flux: np.ndarray     # N(t) = int a(x, M(t)) f(t, x) dx on t_grid
    f_at_zero: np.ndarray         # f(t, 0) on t_grid
    mass: np.ndarray
    picard_residuals: list
    final_density: np.ndarray
    config: MeanFieldConfig
    grid: PDEGrid

    @property
    def dx(self):
        return float(self.x_grid[1] - self.x_grid[0])

    def forced_at(self, t):
        return np.interp(t, self.t_grid, self.forced)

    def activity_at(self, t):
        """Activity between nodes: exact homogeneous decay plus interpolated forcing."""
        c = self.config
        if c.instantaneous:
            return self.forced_at(t)
        return c.m0 * np.exp(-c.alpha * np.asarray(t, dtype=float)) + self.forced_at(t)

    def forced_max(self, t0, t1):
        """Max of the piecewise-linear forced part on ``[t0, t1]``."""
        lo, hi = np.searchsorted(self.t_grid, [t0, t1], side="right")
        inner = self.forced[lo:hi]
        ends = max(float(self.forced_at(t0)), float(self.forced_at(t1)))
        return float(max(ends, inner.max())) if inner.size else ends

    def density_at_T(self):
        return self.final_density

    def sample_ages(self, n, rng, t=None):
        """i.i.d. ages from ``f(t, .)`` (default ``t = T``) by inverse CDF."""
        if t is None:
            f = self.final_density
        else:
            f = self.density[int(np.argmin(np.abs(self.density_times - t)))]
        p = np.clip(f, 0, None)
        cum = np.cumsum(p)
        cum /= cum[-1]
        j = np.searchsorted(cum, rng.random(n), side="right")
        j = np.minimum(j, len(cum) - 1)
        x = self.x_grid[j] + (rng.random(n) - 0.5) * self.dx
        return np.maximum(x, 0.0)

    def integrated_flux(self):
        """Cumulative trapezoid of the spiking rate on ``t_grid``."""
        r = self.boundary_flux
        h = np.diff(self.t_grid)
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (r[1:] + r[:-1]))])


def transport_step(f, m, dt, dx, model, x=None):
    """Advance the density one step with the activity frozen at ``m``.

    Upwind advection at unit speed, then multiplication by
    ``exp(-a dt)`` with the rate taken at the midpoint of the incoming
    characteristic; absorbed mass re-enters cell 0.  The last cell keeps its
    content (no outflow), so the scheme is exactly conservative.
    """
    c = dt / dx
    if c > 1.0 + 1e-12:
        raise CFLError(f"CFL condition dt <= dx violated (dt={dt!r}, dx={dx!r})")
    if x is None:
        x = np.arange(len(f)) * dx
    g = np.empty_like(f)
    g[1:] = (1.0 - c) * f[1:] + c * f[:-1]
    g[0] = (1.0 - c) * f[0]
    g[-1] += c * f[-1]
    lost = -np.expm1(-model(np.maximum(x - 0.5 * dt, 0.0), m) * dt) * g
    g -= lost
    g[0] += lost.sum()
    return g


def stationary_profile(model, x_max, dx):
    """Normalised ``exp(-int_0^x a)`` for a rate that ignores the activity."""
    x = np.arange(int(round(x_max / dx)) + 1) * dx
    a = model(x, 0.0)
    for m in (1.0, 10.0):
        if not np.array_equal(a, model(x, m)):
            raise GridError("stationary profile needs an activity-independent rate")
    A = np.concatenate([[0.0], np.cumsum(0.5 * dx * (a[1:] + a[:-1]))])
    f = np.exp(-A)
    total = f.sum() * dx
    tail = math.inf if a[-1] <= 0 else f[-1] / a[-1]
    if not tail / total <= 1e-6:
        raise GridError(f"profile not normalisable on [0, {x_max}]: tail mass ratio {tail / total:.3g} > 1e-6")
    return f / total


def _integrator_weights(alpha, h):
    E = math.exp(-alpha * h)
    total = -math.expm1(-alpha * h) / alpha
    ah = alpha * h
    if ah < 1e-6:
        w1 = h / 2 - alpha * h * h / 6
    else:
        w1 = total - (-math.expm1(-ah) - ah * E) / (alpha * ah)
    return E, total - w1, w1


def _activity_update(cfg: MeanFieldConfig, t, rate, beta):
    """Forced part of the activity path driven by the spiking rate ``rate``.

    The full path is ``M0 exp(-alpha t)`` plus the returned array (or just the
    returned array in instantaneous-decay mode).
    """
    forcing = np.convolve(rate, beta)[: len(t)]
    if cfg.instantaneous:
        return cfg.epsilon * forcing
    h = t[1] - t[0]
    E, w0, w1 = _integrator_weights(cfg.alpha, h)
    coef = cfg.alpha * cfg.epsilon
    inc = coef * (w0 * forcing[:-1] + w1 * forcing[1:])
    p = np.zeros(len(t))
    for n in range(len(t) - 1):
        p[n + 1] = E * p[n] + inc[n]
    return p


def _transport_path(cfg, x, f0, t, M, dx, dt, rows):
    model = cfg.intensity
    nt = len(t) - 1
    rate = np.empty(nt + 1)
    f_zero = np.empty(nt + 1)
    mass = np.empty(nt + 1)
    keep = {}
    f = f0.copy()
    for n in range(nt + 1):
        rate[n] = np.trapezoid(model(x, M[n]) * f, dx=dx)
        f_zero[n] = f[0]
        mass[n] = f.sum() * dx
        if n in rows:
            keep[n] = f.copy()
        if n < nt:
            # activity frozen at the step midpoint
            f = transport_step(f, 0.5 * (M[n] + M[n + 1]), dt, dx, model, x)
    return rate, f_zero, mass, keep, f


def make_grids(cfg: MeanFieldConfig, grid: PDEGrid):
    dx = grid.dx
    dt = grid.dt if grid.dt is not None else dx
    if dt > dx * (1 + 1e-12):
        raise CFLError(f"CFL condition dt <= dx violated (dt={dt!r}, dx={dx!r})")
    x_max = grid.x_max
    if x_max is None:
        sm = cfg.g0.support_max
        if not math.isfinite(sm):
            raise GridError("x_max must be given for an initial law with unbounded support")
        x_max = sm + cfg.horizon + 5.0
    x = np.arange(int(math.ceil(x_max / dx - 1e-9)) + 1) * dx
    nt = int(round(cfg.horizon / dt))
    if abs(nt * dt - cfg.horizon) > 1e-9 * cfg.horizon:
        raise GridError(f"horizon {cfg.horizon} is not a multiple of dt={dt}")
    t = np.arange(nt + 1) * dt
    return x, t, dx, dt


def picard_solve(cfg: MeanFieldConfig, grid: PDEGrid = PDEGrid(), initial_guess=None) -> MeanFieldSolution:
    x, t, dx, dt = make_grids(cfg, grid)
    f0 = laws.cell_masses(cfg.g0, x) / dx
    beta = delays_mod.hat_weights(cfg.delay, dt, len(t))
    rows = set(np.unique(np.linspace(0, len(t) - 1, min(grid.density_rows, len(t))).round().astype(int)).tolist())

    base = np.zeros(len(t)) if cfg.instantaneous else cfg.m0 * np.exp(-cfg.alpha * t)
    P = np.zeros(len(t)) if initial_guess is None else np.asarray(initial_guess, dtype=float) - base
    residuals = []
    for _ in range(grid.max_iters):
        rate, f_zero, mass, keep, f_end = _transport_path(cfg, x, f0, t, base + P, dx, dt, rows)
        new = _activity_update(cfg, t, rate, beta)
        if grid.damping < 1:
            new = (1 - grid.damping) * P + grid.damping * new
        res = float(np.max(np.abs(new - P)))
        residuals.append(res)
        P = new
        if res < grid.picard_tol:
            break
    else:
        raise PicardError(
            f"Picard iteration did not converge in {grid.max_iters} iterations "
            f"(last residual {residuals[-1]:.3g}, tol {grid.picard_tol:.3g})",
            residuals,
        )
    idx = np.array(sorted(rows))
    return MeanFieldSolution(
        x_grid=x,
        t_grid=t,
        density=np.array([keep[i] for i in idx]),
        density_times=t[idx],
        activity=base + P,
        forced=P,
        boundary_flux=rate,
        f_at_zero=f_zero,
        mass=mass,
        picard_residuals=residuals,
        final_density=f_end,
        config=cfg,
        grid=grid,
    )


def picard_solve_mixture(cfg: MeanFieldConfig, m0_law: laws.Law, grid: PDEGrid = PDEGrid()):
    """Per-atom solves for a finitely supported ``m0``; returns ``[(weight, solution)]``."""
    atoms = m0_law.atoms()
    if atoms is None:
        raise GridError("random M0 is only supported for finitely supported laws")
    out = []
    for v, w in atoms:
        sub = MeanFieldConfig(cfg.alpha, cfg.epsilon, cfg.horizon, cfg.g0, v, cfg.intensity, cfg.delay, cfg.instantaneous)
        out.append((w, picard_solve(sub, grid)))
    return out
