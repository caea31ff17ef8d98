"""Exact event-driven simulation of the N-neuron age network.

Between events every age grows at unit speed and the global activity decays
as ``M' = -alpha M``; both flows are applied analytically.  Spikes are drawn
by thinning against a monotone envelope over arrival-free windows; a spike of
neuron ``i`` at time ``s`` resets its age and schedules an activity increment
``alpha * epsilon / N`` at ``s + tau_i``.

Ages are stored as ``t - birth[i]`` where ``birth[i]`` is the time of the last
reset (``-X0[i]`` before the first spike).  This makes ``X_t <= X_0 + t`` hold
bit-exactly and makes the flow O(1).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import delays as delays_mod
from . import intensity as intensity_mod
from . import laws


class SimulationError(RuntimeError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    n_neurons: int
    alpha: float
    epsilon: float
    horizon: float
    g0: laws.Law
    m0: laws.Law
    intensity: intensity_mod.IntensityModel
    delay: delays_mod.DelayModel = delays_mod.Dirac(0.0)
    seed: int = 0
    snapshot_grid: int = 100
    snapshot_events: bool = False
    store_ages: bool = False
    window: Optional[float] = None
    max_events: int = 10_000_000
    record_rejections: bool = False
    moment_cap: Optional[float] = None
    pin_m0: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.n_neurons, (int, np.integer)) and self.n_neurons >= 1):
            raise ModelError(f"n_neurons must be an integer >= 1, got {self.n_neurons!r}")
        if not self.alpha > 0:
            raise ModelError("alpha must be > 0")
        if not self.epsilon >= 0:
            raise ModelError("epsilon must be >= 0 (inhibition is not supported)")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ModelError("horizon must be finite and > 0")
        if self.snapshot_grid < 2:
            raise ModelError("snapshot_grid must be >= 2")
        if self.window is not None and not self.window > 0:
            raise ModelError("window must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be an unsigned 64-bit integer")

    @property
    def jump(self) -> float:
        """Activity increment carried by one arrival."""
        return self.alpha * self.epsilon / self.n_neurons

    @property
    def default_window(self) -> float:
        return self.window if self.window is not None else min(0.1 / self.alpha, 1.0)


def streams(seed: int, n: int = 4) -> list[np.random.Generator]:
    """Independent generators for (g0, m0, delays, thinning)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass
class EventLog:
    times: list = field(default_factory=list)
    kinds: list = field(default_factory=list)
    ids: list = field(default_factory=list)

    def append(self, t, kind, i):
        self.times.append(t)
        self.kinds.append(kind)
        self.ids.append(i)

    def __len__(self):
        return len(self.times)

    def of_kind(self, kind):
        t = np.array([x for x, k in zip(self.times, self.kinds) if k == kind], dtype=float)
        i = np.array([x for x, k in zip(self.ids, self.kinds) if k == kind], dtype=int)
        return t, i


@dataclass
class NetworkState:
    config: NetworkConfig
    t: float
    birth: np.ndarray
    activity: float
    initial_ages: np.ndarray
    delay_vector: np.ndarray
    initial_activity: float
    pending: list = field(default_factory=list)
    log: EventLog = field(default_factory=EventLog)
    dropped: list = field(default_factory=list)
    n_spikes: int = 0
    n_arrivals: int = 0
    n_proposals: int = 0
    n_rejections: int = 0
    ratio_violations: int = 0

    @property
    def ages(self) -> np.ndarray:
        return self.t - self.birth

    @property
    def n_events(self) -> int:
        return self.n_spikes + self.n_arrivals


def init(config: NetworkConfig, gens=None) -> NetworkState:
    rg, rm, rd, _ = streams(config.seed) if gens is None else gens
    x0 = np.asarray(config.g0.sample(config.n_neurons, rg), dtype=float)
    if config.pin_m0 is not None:
        m0 = float(config.pin_m0)
    else:
        m0 = float(config.m0.sample(1, rm)[0])
    if np.any(x0 < 0) or not np.all(np.isfinite(x0)):
        raise ModelError("initial-age law produced a negative or non-finite age")
    if not (m0 >= 0 and math.isfinite(m0)):
        raise ModelError("initial-activity law produced a negative or non-finite value")
    tau = delays_mod.sample_delays(config.delay, config.n_neurons, rd)
    bound_x = float(x0.max()) + config.horizon
    bound_m = m0 + config.alpha * config.epsilon * 50 + 1.0
    try:
        intensity_mod.require_monotone(config.intensity, bound_x, bound_m)
    except intensity_mod.IntensityError as e:
        raise ModelError(str(e)) from None
    return NetworkState(
        config=config,
        t=0.0,
        birth=-x0,
        activity=m0,
        initial_ages=x0.copy(),
        delay_vector=tau,
        initial_activity=m0,
    )


def _advance_to(state: NetworkState, t_new: float) -> None:
    dt = t_new - state.t
    if dt < 0:
        raise ValueError(f"cannot flow backwards (dt={dt!r})")
    if dt > 0:
        state.activity *= math.exp(-state.config.alpha * dt)
        state.t = t_new


def flow(state: NetworkState, dt: float) -> NetworkState:
    """Deterministic motion over an event-free interval of length ``dt``."""
    if dt < 0:
        raise ValueError(f"flow duration must be >= 0, got {dt!r}")
    _advance_to(state, state.t + dt)
    return state


def propose(t0, window, bounds, rng):
    """Candidate points of a Poisson process with per-neuron rates ``bounds``.

    Yields ``(s, i, u)``: the time, the neuron the point belongs to, and the
    acceptance uniform.  Stops silently at the end of the window.
    """
    cum = np.cumsum(bounds)
    total = float(cum[-1])
    if not total > 0:
        return
    end = t0 + window
    n = len(bounds)
    s = t0
    while True:
        s += rng.standard_exponential() / total
        if s > end:
            return
        i = int(np.searchsorted(cum, rng.random() * total, side="right"))
        yield s, min(i, n - 1), rng.random()


def next_spike_candidate(state: NetworkState, window: float, rng) -> Optional[tuple]:
    """First accepted spike in ``(t, t + window]`` or ``None``.

    The caller guarantees that no arrival falls inside the window, so the
    activity only decays there and ``a(age + window, M_t)`` dominates each
    neuron's rate.
    """
    cfg = state.config
    a = cfg.intensity
    t0 = state.t
    m_bar = state.activity
    bounds = a((t0 + window) - state.birth, m_bar)
    for s, i, u in propose(t0, window, bounds, rng):
        state.n_proposals += 1
        rate = float(a(s - state.birth[i], m_bar * math.exp(-cfg.alpha * (s - t0))))
        if rate > bounds[i]:
            state.ratio_violations += 1
        if u * bounds[i] < rate:
            return s, i
        state.n_rejections += 1
        if cfg.record_rejections:
            state.log.append(s, "reject", i)
    return None


def apply_spike(state: NetworkState, i: int, s: float) -> NetworkState:
    cfg = state.config
    if s != state.t:
        raise ValueError("spikes are applied at the current time")
    state.birth[i] = s
    state.n_spikes += 1
    state.log.append(s, "spike", i)
    tau = float(state.delay_vector[i])
    if tau == 0.0:
        # no delay: reset and activity jump form one atomic event
        state.activity += cfg.jump
        state.n_arrivals += 1
        state.log.append(s, "arrival", i)
    else:
        arr = s + tau
        if arr > cfg.horizon:
            state.dropped.append((arr, i))
        else:
            heapq.heappush(state.pending, (arr, i))
    return state


def apply_arrival(state: NetworkState, j: int, s: float) -> NetworkState:
    assert state.pending and state.pending[0] == (s, j), "arrival applied out of queue order"
    assert s == state.t, "arrival applied away from its scheduled time"
    heapq.heappop(state.pending)
    state.activity += state.config.jump
    state.n_arrivals += 1
    state.log.append(s, "arrival", j)
    return state


@dataclass
class Snapshots:
    t: np.ndarray
    activity: np.ndarray
    age_q10: np.ndarray
    age_q50: np.ndarray
    age_q90: np.ndarray
    age_max: np.ndarray
    mean_a: np.ndarray
    mean_a2: np.ndarray
    ages: Optional[np.ndarray] = None


class _Recorder:
    def __init__(self, config: NetworkConfig):
        self.cfg = config
        self.grid = np.linspace(0.0, config.horizon, config.snapshot_grid)
        self.k = 0
        self.rows = []
        self.ages = []
        self.bound_violations = 0

    def _take(self, state, theta):
        cfg = self.cfg
        ages = theta - state.birth
        m = state.activity * math.exp(-cfg.alpha * (theta - state.t))
        if np.any(ages > state.initial_ages + theta) or m < 0:
            self.bound_violations += 1
        rate = cfg.intensity(ages, m)
        q = np.quantile(ages, [0.1, 0.5, 0.9])
        self.rows.append((theta, m, q[0], q[1], q[2], float(ages.max()), float(rate.mean()), float((rate**2).mean())))
        if cfg.store_ages:
            self.ages.append(ages.copy())

    def until(self, state, t_end, inclusive=False):
        g = self.grid
        while self.k < len(g) and (g[self.k] < t_end or (inclusive and g[self.k] <= t_end)):
            self._take(state, g[self.k])
            self.k += 1

    def event(self, state):
        if self.cfg.snapshot_events:
            self._take(state, state.t)

    def result(self) -> Snapshots:
        cols = np.array(self.rows, dtype=float).T
        order = np.argsort(cols[0], kind="stable")
        cols = cols[:, order]
        ages = np.array(self.ages)[order] if self.cfg.store_ages else None
        return Snapshots(*cols, ages=ages)


@dataclass
class SimulationResult:
    snapshots: Snapshots
    log: EventLog
    state: NetworkState
    bound_violations: int

    def stats(self) -> dict:
        st = self.state
        mmax = float(np.max(self.snapshots.mean_a2))
        cap = st.config.moment_cap
        return {
            "spikes": st.n_spikes,
            "arrivals": st.n_arrivals,
            "dropped_arrivals": len(st.dropped),
            "proposals": st.n_proposals,
            "rejections": st.n_rejections,
            "ratio_violations": st.ratio_violations,
            "bound_violations": self.bound_violations,
            "initial_activity": st.initial_activity,
            "max_mean_a2": mmax,
            "moment_cap_exceeded": None if cap is None else bool(mmax > cap),
        }


def _check_cap(state):
    cap = state.config.max_events
    if state.n_events > cap:
        raise SimulationError(f"event count exceeded the safety cap max_events={cap}")


def simulate(config: NetworkConfig) -> SimulationResult:
    gens = streams(config.seed)
    state = init(config, gens)
    rng = gens[3]
    T = config.horizon
    rec = _Recorder(config)
    while state.t < T:
        next_arr = state.pending[0][0] if state.pending else math.inf
        end = min(state.t + config.default_window, next_arr, T)
        cand = next_spike_candidate(state, end - state.t, rng)
        if cand is not None:
            s, i = cand
            rec.until(state, s)
            _advance_to(state, s)
            apply_spike(state, i, s)
            rec.event(state)
        else:
            rec.until(state, end)
            _advance_to(state, end)
            while state.pending and state.pending[0][0] <= state.t:
                apply_arrival(state, state.pending[0][1], state.pending[0][0])
                rec.event(state)
        _check_cap(state)
    rec.until(state, T, inclusive=True)
    return SimulationResult(rec.result(), state.log, state, rec.bound_violations)


def check_event_log(log: EventLog, delay_vector, horizon: float) -> list[str]:
    """Arrival/spike matching: every arrival is a spike shifted by its delay.

    Returns a list of problems (empty when consistent).
    """
    problems = []
    st, si = log.of_kind("spike")
    at, ai = log.of_kind("arrival")
    expected = sorted(
        (float(t + delay_vector[i]), int(i)) for t, i in zip(st, si) if t + delay_vector[i] <= horizon
    )
    got = sorted((float(t), int(i)) for t, i in zip(at, ai))
    if expected != got:
        problems.append(f"arrival multiset differs from shifted spikes ({len(expected)} expected, {len(got)} logged)")
    times = np.asarray(log.times)
    if times.size and np.any(np.diff(times) < 0):
        problems.append("event times are not non-decreasing")
    return problems
