"""Particle system and its i.i.d. mean-field copies driven by the same noise.

Copy ``i`` starts from the same age as neuron ``i`` and spikes at rate
``a(Y_i, M_mf(t))`` where ``M_mf`` is the deterministic activity of the PDE
solution.  Both processes are thinnings of one Poisson stream per neuron:
each proposal ``(s, i)`` carries a single uniform ``u``, and the particle
(resp. the copy) fires when ``u * bound_i < rate``.  A proposal accepted by
both resets both, which is what keeps the two trajectories glued together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import NetworkConfig
from .pde import MeanFieldSolution


class CouplingError(ValueError):
    pass


@dataclass
class CoupledRun:
    config: NetworkConfig
    times: np.ndarray
    x_ages: list             # particle ages at each snapshot time
    y_ages: list             # copy ages at each snapshot time
    m_particle: np.ndarray   # M^N at snapshot times
    m_meanfield: np.ndarray  # M_mf at snapshot times
    m_gap: np.ndarray        # |M^N - M_mf|, computed from the forced parts
    initial_ages: np.ndarray
    state: engine.NetworkState
    copy_spikes: int = 0
    both_spikes: int = 0
    copy_bound_violations: int = 0

    def index(self, t):
        hits = np.nonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))[0]
        if hits.size == 0:
            raise ValueError(f"t={t!r} is not a snapshot time of this run")
        return int(hits[0])


def coupling_distance_values(x, y, m_particle, m_meanfield=None, m_gap=None) -> float:
    """``(1/N) sum_i |X_i - Y_i| + |M^N - M_mf|``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gap = abs(m_particle - m_meanfield) if m_gap is None else m_gap
    return math.fsum(np.abs(x - y).tolist()) / len(x) + gap


def coupling_distance(run: CoupledRun, t: float) -> float:
    k = run.index(t)
    return coupling_distance_values(run.x_ages[k], run.y_ages[k], None, m_gap=float(run.m_gap[k]))


def _check_match(config: NetworkConfig, mf: MeanFieldSolution):
    c = mf.config
    problems = []
    if c.instantaneous:
        problems.append("mean-field solution uses the instantaneous-decay mode")
    for name in ("alpha", "epsilon", "intensity", "delay"):
        if getattr(config, name) != getattr(c, name):
            problems.append(f"{name} differs ({getattr(config, name)!r} vs {getattr(c, name)!r})")
    if config.g0 != c.g0:
        problems.append("initial-age law differs")
    if abs(mf.t_grid[-1] - config.horizon) > 1e-9:
        problems.append(f"horizon differs ({config.horizon} vs {mf.t_grid[-1]})")
    if config.pin_m0 is None or config.pin_m0 != c.m0:
        problems.append(f"M0 must be pinned to the mean-field value {c.m0!r} (pin_m0={config.pin_m0!r})")
    if problems:
        raise CouplingError("particle config does not match the mean-field solution: " + "; ".join(problems))


def simulate_coupled(config: NetworkConfig, mf: MeanFieldSolution) -> CoupledRun:
    _check_match(config, mf)
    gens = engine.streams(config.seed)
    state = engine.init(config, gens)
    rng = gens[3]
    a = config.intensity
    alpha, T, m0 = config.alpha, config.horizon, mf.config.m0
    bx = state.birth
    by = state.birth.copy()
    # particle activity = m0 exp(-alpha t) + J(t); J is tracked separately so
    # that the homogeneous part cancels exactly against the mean-field one
    jump_part = 0.0

    grid = np.linspace(0.0, T, config.snapshot_grid)
    k = 0
    xs, ys, mp, mm, gaps = [], [], [], [], []
    copy_spikes = both = viol = 0

    def take(theta):
        nonlocal viol
        jx = jump_part * math.exp(-alpha * (theta - state.t))
        fy = float(mf.forced_at(theta))
        xa, ya = theta - bx, theta - by
        if np.any(ya > state.initial_ages + theta):
            viol += 1
        xs.append(xa)
        ys.append(ya)
        base = m0 * math.exp(-alpha * theta)
        mp.append(base + jx)
        mm.append(base + fy)
        gaps.append(abs(jx - fy))

    def snap_until(t_end, inclusive=False):
        nonlocal k
        while k < len(grid) and (grid[k] < t_end or (inclusive and grid[k] <= t_end)):
            take(grid[k])
            k += 1

    def advance(t_new):
        nonlocal jump_part
        jump_part *= math.exp(-alpha * (t_new - state.t))
        engine._advance_to(state, t_new)

    while state.t < T:
        t0 = state.t
        next_arr = state.pending[0][0] if state.pending else math.inf
        end = min(t0 + config.default_window, next_arr, T)
        base0 = m0 * math.exp(-alpha * t0)
        bounds = np.maximum(a(end - bx, base0 + jump_part), a(end - by, base0 + mf.forced_max(t0, end)))
        hit = None
        for s, i, u in engine.propose(t0, end - t0, bounds, rng):
            state.n_proposals += 1
            base = m0 * math.exp(-alpha * s)
            rx = float(a(s - bx[i], base + jump_part * math.exp(-alpha * (s - t0))))
            ry = float(a(s - by[i], base + float(mf.forced_at(s))))
            if max(rx, ry) > bounds[i]:
                state.ratio_violations += 1
            thr = u * bounds[i]
            if thr < rx or thr < ry:
                hit = (s, i, thr < rx, thr < ry)
                break
            state.n_rejections += 1
        if hit is not None:
            s, i, hx, hy = hit
            snap_until(s)
            advance(s)
            if hx:
                engine.apply_spike(state, i, s)
                if state.delay_vector[i] == 0.0:
                    jump_part += config.jump
            if hy:
                by[i] = s
                copy_spikes += 1
                both += hx
        else:
            snap_until(end)
            advance(end)
            while state.pending and state.pending[0][0] <= state.t:
                engine.apply_arrival(state, state.pending[0][1], state.pending[0][0])
                jump_part += config.jump
        engine._check_cap(state)
    snap_until(T, inclusive=True)

    return CoupledRun(
        config=config,
        times=grid,
        x_ages=xs,
        y_ages=ys,
        m_particle=np.array(mp),
        m_meanfield=np.array(mm),
        m_gap=np.array(gaps),
        initial_ages=state.initial_ages,
        state=state,
        copy_spikes=copy_spikes,
        both_spikes=both,
        copy_bound_violations=viol,
    )
