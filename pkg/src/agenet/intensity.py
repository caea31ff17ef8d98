"""Spiking-rate functions a(x, m) and grid-sampled checks of their hypotheses.

A rate takes the age ``x`` of a neuron (time since its last spike) and the
global activity ``m`` and returns the instantaneous spiking intensity.  The
simulator relies on three properties:

* monotonicity in both arguments (exact thinning envelopes),
* ``a(0, m) = 0`` (a freshly reset neuron cannot fire),
* uniform smallness near the origin (no double spikes in a short time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np


class IntensityError(ValueError):
    """Invalid rate model or invalid evaluation point."""


@dataclass(frozen=True)
class PowerThreshold:
    """``x**xi + 1{x > x_star} * (slope_a * m + offset_b)``."""

    xi: float
    x_star: float
    slope_a: float
    offset_b: float

    def __post_init__(self):
        if not self.xi > 0:
            raise IntensityError(f"PowerThreshold: xi must be > 0, got {self.xi}")
        for name in ("x_star", "slope_a", "offset_b"):
            if not getattr(self, name) >= 0:
                raise IntensityError(f"PowerThreshold: {name} must be >= 0")

    def __call__(self, x, m):
        x = np.asarray(x, dtype=float)
        m = np.asarray(m, dtype=float)
        # right-continuous indicator: strictly above the threshold
        return x ** self.xi + (x > self.x_star) * (self.slope_a * m + self.offset_b)


@dataclass(frozen=True)
class PurePower:
    """``x**xi``, independent of the activity."""

    xi: float

    def __post_init__(self):
        if not self.xi >= 1:
            raise IntensityError(f"PurePower: xi must be >= 1, got {self.xi}")

    def __call__(self, x, m):
        x = np.asarray(x, dtype=float)
        return x ** self.xi + 0.0 * np.asarray(m, dtype=float)


@dataclass(frozen=True)
class Custom:
    """User-supplied vectorised rate ``fn(x, m)``.

    ``declared_monotone`` is a promise by the caller; the engine still
    re-checks it on a grid before simulating.
    """

    fn: Callable
    declared_monotone: bool
    name: str = "custom"
    params: tuple = ()

    def __call__(self, x, m):
        return np.asarray(self.fn(np.asarray(x, dtype=float), np.asarray(m, dtype=float)), dtype=float)


Family = Union[PowerThreshold, PurePower, Custom]


@dataclass(frozen=True)
class GrowthBound:
    """Constants of the two-sided growth condition

    ``c_rho * x**((1+rho)/(1-rho)) <= a(x, m) <= C_xi * (1 + x**(xi-2) + m**(xi-2))``.
    """

    xi: float
    rho: float
    C_xi: float
    c_rho: float

    def __post_init__(self):
        if not self.xi > 2:
            raise IntensityError("growth bound: xi must be > 2")
        if not 0 < self.rho < 1:
            raise IntensityError("growth bound: rho must lie in (0, 1)")
        if not (self.C_xi > 0 and self.c_rho > 0):
            raise IntensityError("growth bound: C_xi and c_rho must be positive")

    def lower(self, x):
        return self.c_rho * np.asarray(x, dtype=float) ** ((1 + self.rho) / (1 - self.rho))

    def upper(self, x, m):
        p = self.xi - 2
        return self.C_xi * (1 + np.asarray(x, dtype=float) ** p + np.asarray(m, dtype=float) ** p)


@dataclass(frozen=True)
class IntensityModel:
    family: Family
    lipschitz_C0: Optional[float] = None
    growth: Optional[GrowthBound] = None

    def __post_init__(self):
        if self.lipschitz_C0 is not None and not self.lipschitz_C0 > 0:
            raise IntensityError("lipschitz_C0 must be positive when given")

    def __call__(self, x, m):
        """Unchecked vectorised evaluation (hot path of the simulators)."""
        return self.family(x, m)

    @property
    def m_independent(self) -> bool:
        return isinstance(self.family, PurePower) or (
            isinstance(self.family, PowerThreshold) and self.family.slope_a == 0
        )


def evaluate(model: IntensityModel, x, m):
    """Return ``a(x, m)``; raises on negative arguments."""
    xa = np.asarray(x, dtype=float)
    ma = np.asarray(m, dtype=float)
    if np.any(xa < 0) or np.any(ma < 0):
        raise IntensityError("rate is only defined for x >= 0 and m >= 0")
    if np.any(~np.isfinite(xa)) or np.any(~np.isfinite(ma)):
        raise IntensityError("rate arguments must be finite")
    out = model(xa, ma)
    return float(out) if out.ndim == 0 else out


def envelope(model: IntensityModel, x_max, m_max):
    """Upper bound of ``a`` on ``[0, x_max] x [0, m_max]``.

    Equal to the corner value; valid because the rate is monotone in both
    arguments.
    """
    return evaluate(model, x_max, m_max)


# --------------------------------------------------------------------------
# hypothesis checks


@dataclass
class GridSpec:
    x_max: float
    m_max: float
    nx: int = 201
    nm: int = 51

    def __post_init__(self):
        if self.nx < 3 or self.nm < 3:
            raise IntensityError(
                f"grid too coarse: need at least 3 points per axis (got nx={self.nx}, nm={self.nm})"
            )
        if not (self.x_max > 0 and self.m_max > 0):
            raise IntensityError("grid rectangle must have positive extent")

    def axes(self):
        return np.linspace(0.0, self.x_max, self.nx), np.linspace(0.0, self.m_max, self.nm)


@dataclass
class HypothesisReport:
    monotone_x: bool
    monotone_m: bool
    monotone_violations: list = field(default_factory=list)
    zero_at_origin: bool = True
    positive_at_zero_activity: bool = True
    x_star_delta: dict = field(default_factory=dict)
    h3_failures: list = field(default_factory=list)
    lipschitz_ratio: float = float("nan")
    lipschitz_degenerate_pairs: int = 0
    lipschitz_ok: Optional[bool] = None
    growth_ok: Optional[bool] = None

    @property
    def h1_ok(self) -> bool:
        return self.monotone_x and self.monotone_m and self.zero_at_origin

    @property
    def h3_ok(self) -> bool:
        return not self.h3_failures

    @property
    def passed(self) -> bool:
        """Mandatory checks only: monotonicity, ``a(0, .) = 0`` and H3."""
        return self.h1_ok and self.h3_ok

    def lines(self) -> list[str]:
        ok = lambda b: "PASS" if b else "FAIL"
        out = [
            f"H1 monotone in x: {ok(self.monotone_x)}",
            f"H1 monotone in m: {ok(self.monotone_m)}",
            f"H1 a(0, m) = 0: {ok(self.zero_at_origin)}",
        ]
        for v in self.monotone_violations[:10]:
            out.append(f"  violating pair: a{v[0]} = {v[2]!r} > a{v[1]} = {v[3]!r}")
        if not self.positive_at_zero_activity:
            out.append("note: a(x, 0) = 0 for some x > 0 (flagged, not enforced)")
        for delta, xs in self.x_star_delta.items():
            out.append(f"H3 delta={delta!r}: x*_delta = {xs!r}")
        out.append(f"H3 uniform smallness near x=0: {ok(self.h3_ok)}")
        for msg in self.h3_failures:
            out.append(f"  {msg}")
        if self.lipschitz_ok is not None or np.isfinite(self.lipschitz_ratio):
            tail = "" if self.lipschitz_ok is None else f" ({ok(self.lipschitz_ok)} vs declared C0)"
            out.append(
                f"H4 empirical ratio: {self.lipschitz_ratio!r}{tail}; "
                f"{self.lipschitz_degenerate_pairs} pairs with zero denominator"
            )
        if self.growth_ok is not None:
            out.append(f"growth envelope: {ok(self.growth_ok)}")
        return out


def _x_star(model, xs, ms, delta):
    """Largest sampled age whose whole column stays below ``delta``.

    When even the first positive grid age fails, ages ``x1 * 2**-k`` are
    probed so that a coarse grid is not mistaken for a violation.
    """
    sup = model(xs[:, None], ms[None, :]).max(axis=1)
    bad = np.nonzero(sup > delta)[0]
    if bad.size == 0:
        return float(xs[-1]), None
    first_bad = int(bad[0])
    if first_bad > 1:
        return float(xs[first_bad - 1]), None
    probes = xs[1] * np.exp2(-np.arange(1, 41, dtype=float))
    psup = model(probes[:, None], ms[None, :]).max(axis=1)
    good = np.nonzero(psup <= delta)[0]
    if good.size:
        return float(probes[good[0]]), None
    j = int(np.argmax(model(np.array([probes[-1]]), ms)))
    x_lo, m_hi = float(probes[-1]), float(ms[j])
    return 0.0, (
        f"delta={delta!r}: sup_m a(x, m) > delta for every sampled x in (0, {float(xs[1])!r}]; "
        f"e.g. a({x_lo!r}, {m_hi!r}) = {float(model(x_lo, m_hi))!r}"
    )


def check_hypotheses(model: IntensityModel, grid: GridSpec, deltas=(0.1, 0.01)) -> HypothesisReport:
    xs, ms = grid.axes()
    A = model(xs[:, None], ms[None, :])

    violations = []
    dx = np.diff(A, axis=0)
    dm = np.diff(A, axis=1)
    for i, j in zip(*np.nonzero(dx < 0)):
        violations.append(((xs[i], ms[j]), (xs[i + 1], ms[j]), float(A[i, j]), float(A[i + 1, j])))
    for i, j in zip(*np.nonzero(dm < 0)):
        violations.append(((xs[i], ms[j]), (xs[i], ms[j + 1]), float(A[i, j]), float(A[i, j + 1])))
    violations = [((float(p[0]), float(p[1])), (float(q[0]), float(q[1])), u, v) for p, q, u, v in violations]

    rep = HypothesisReport(
        monotone_x=not np.any(dx < 0),
        monotone_m=not np.any(dm < 0),
        monotone_violations=violations,
        zero_at_origin=bool(np.all(A[0, :] == 0)),
        positive_at_zero_activity=bool(np.all(A[1:, 0] > 0)),
    )

    for delta in deltas:
        if not delta > 0:
            raise IntensityError("delta values must be positive")
        xs_d, failure = _x_star(model, xs, ms, delta)
        rep.x_star_delta[delta] = xs_d
        if failure:
            rep.h3_failures.append(failure)

    # empirical H4 ratio over neighbouring grid pairs (x-, m- and diagonal steps)
    ratios, degenerate = [], 0
    for sl_a, sl_b in (
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        ((slice(None, -1), slice(None, -1)), (slice(1, None), slice(1, None))),
    ):
        X = np.broadcast_to(xs[:, None], A.shape)
        Mm = np.broadcast_to(ms[None, :], A.shape)
        a1, a2 = A[sl_a], A[sl_b]
        den = np.minimum(a1, a2) * np.abs(X[sl_a] - X[sl_b]) + np.abs(Mm[sl_a] - Mm[sl_b])
        num = np.abs(a1 - a2)
        pos = den > 0
        degenerate += int(np.count_nonzero(~pos & (num > 0)))
        if np.any(pos):
            ratios.append(float(np.max(num[pos] / den[pos])))
    rep.lipschitz_ratio = max(ratios) if ratios else float("nan")
    rep.lipschitz_degenerate_pairs = degenerate
    if model.lipschitz_C0 is not None:
        rep.lipschitz_ok = degenerate == 0 and rep.lipschitz_ratio <= model.lipschitz_C0

    if model.growth is not None:
        g = model.growth
        X, Mm = np.meshgrid(xs, ms, indexing="ij")
        rep.growth_ok = bool(np.all(g.lower(X) <= A) and np.all(A <= g.upper(X, Mm)))
    return rep


def default_grid(x_max: float, m_max: float) -> GridSpec:
    return GridSpec(x_max=max(x_max, 1e-6), m_max=max(m_max, 1e-6), nx=401, nm=41)


def require_monotone(model: IntensityModel, x_max: float, m_max: float) -> None:
    """Refuse a custom rate that is not (declared and sampled) monotone."""
    fam = model.family
    if not isinstance(fam, Custom):
        return
    if not fam.declared_monotone:
        raise IntensityError(f"custom rate {fam.name!r} is not declared monotone; thinning needs monotonicity")
    rep = check_hypotheses(model, default_grid(x_max, m_max), deltas=())
    if not (rep.monotone_x and rep.monotone_m):
        p = rep.monotone_violations[0]
        raise IntensityError(
            f"custom rate {fam.name!r} fails the monotonicity grid check, e.g. a{p[0]} > a{p[1]}"
        )


# --------------------------------------------------------------------------
# named custom rates usable from config files


def _zero(x, m):
    return np.zeros(np.broadcast(x, m).shape)


def _refractory(x_minus=0.5, x_plus=1.5, gain=1.0):
    # threshold x*(m) decreasing from x_plus (m=0) to x_minus (m -> inf)
    def fn(x, m):
        thr = x_minus + (x_plus - x_minus) * np.exp(-m)
        return gain * np.maximum(x - thr, 0.0)

    return fn


def _nonmonotone_toy(x, m):
    return x * np.exp(-m)


CUSTOM_RATES = {
    "zero": (lambda: _zero, True),
    "refractory": (_refractory, True),
    "nonmonotone_toy": (lambda: _nonmonotone_toy, True),
}


def make_custom(name: str, declared_monotone: Optional[bool] = None, **params) -> Custom:
    if name not in CUSTOM_RATES:
        raise IntensityError(f"unknown custom rate {name!r}; known: {sorted(CUSTOM_RATES)}")
    factory, default_flag = CUSTOM_RATES[name]
    flag = default_flag if declared_monotone is None else bool(declared_monotone)
    return Custom(fn=factory(**params), declared_monotone=flag, name=name, params=tuple(sorted(params.items())))


def from_dict(d: dict) -> IntensityModel:
    """Build a model from a config mapping (``family`` plus numeric keys)."""
    d = dict(d)
    if "family" not in d:
        raise IntensityError("intensity.family is required")
    fam_name = str(d.pop("family")).lower()
    c0 = d.pop("lipschitz_C0", None)
    growth = d.pop("growth", None)
    if fam_name in ("power_threshold", "powerthreshold"):
        fam = PowerThreshold(
            xi=float(d.pop("xi")),
            x_star=float(d.pop("x_star")),
            slope_a=float(d.pop("slope_a")),
            offset_b=float(d.pop("offset_b")),
        )
    elif fam_name in ("pure_power", "purepower"):
        fam = PurePower(xi=float(d.pop("xi")))
    elif fam_name == "custom":
        name = d.pop("name")
        flag = d.pop("declared_monotone", None)
        fam = make_custom(name, flag, **{k: float(v) for k, v in d.items()})
        d = {}
    else:
        raise IntensityError(f"unknown intensity family {fam_name!r}")
    if d:
        raise IntensityError(f"unknown intensity keys: {sorted(d)}")
    return IntensityModel(
        family=fam,
        lipschitz_C0=None if c0 is None else float(c0),
        growth=None if growth is None else GrowthBound(**{k: float(v) for k, v in growth.items()}),
    )


def to_dict(model: IntensityModel) -> dict:
    fam = model.family
    if isinstance(fam, PowerThreshold):
        d = {"family": "power_threshold", "xi": fam.xi, "x_star": fam.x_star,
             "slope_a": fam.slope_a, "offset_b": fam.offset_b}
    elif isinstance(fam, PurePower):
        d = {"family": "pure_power", "xi": fam.xi}
    else:
        d = {"family": "custom", "name": fam.name, "declared_monotone": fam.declared_monotone}
        d.update(dict(fam.params))
    if model.lipschitz_C0 is not None:
        d["lipschitz_C0"] = model.lipschitz_C0
    if model.growth is not None:
        g = model.growth
        d["growth"] = {"xi": g.xi, "rho": g.rho, "C_xi": g.C_xi, "c_rho": g.c_rho}
    return d
