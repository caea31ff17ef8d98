"""Per-neuron transmission delays, drawn once at t = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DelayError(ValueError):
    pass


@dataclass(frozen=True)
class Dirac:
    tau: float = 0.0

    def __post_init__(self):
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise DelayError(f"Dirac delay must be finite and >= 0, got {self.tau}")


@dataclass(frozen=True)
class TruncatedExponential:
    """Density proportional to ``c * exp(-c s)`` on ``[0, tau_max]``."""

    c: float
    tau_max: float

    def __post_init__(self):
        if not (self.c > 0 and self.tau_max > 0 and math.isfinite(self.tau_max)):
            raise DelayError("TruncatedExponential needs c > 0 and finite tau_max > 0")

    @property
    def _z(self):
        return -math.expm1(-self.c * self.tau_max)


DelayModel = Dirac | TruncatedExponential


def support_bound(model: DelayModel) -> float:
    return model.tau if isinstance(model, Dirac) else model.tau_max


def sample_delays(model: DelayModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise DelayError("need at least one delay")
    if isinstance(model, Dirac):
        return np.full(n, model.tau)
    u = rng.random(n)
    s = -np.log1p(-u * model._z) / model.c
    return np.minimum(s, model.tau_max)


def cdf(model: DelayModel, s):
    s = np.asarray(s, dtype=float)
    if isinstance(model, Dirac):
        return (s >= model.tau).astype(float)
    c, T = model.c, model.tau_max
    return np.where(s <= 0, 0.0, np.where(s >= T, 1.0, -np.expm1(-c * np.clip(s, 0, T)) / model._z))


def partial_mean(model: DelayModel, s):
    """``int_0^s w b(dw)`` (right-closed)."""
    s = np.asarray(s, dtype=float)
    if isinstance(model, Dirac):
        return model.tau * (s >= model.tau)
    c = model.c
    u = np.clip(s, 0, model.tau_max)
    # int_0^u w c e^{-cw} dw = (1 - e^{-cu}(1 + cu)) / c
    val = (-np.expm1(-c * u) - c * u * np.exp(-c * u)) / c
    return np.where(s <= 0, 0.0, val / model._z)


def mean(model: DelayModel) -> float:
    if isinstance(model, Dirac):
        return model.tau
    c, T = model.c, model.tau_max
    return 1.0 / c - T * math.exp(-c * T) / model._z


def hat_weights(model: DelayModel, h: float, n: int) -> np.ndarray:
    """Weights ``beta_k = int b(dw) phi_k(w)`` for hat functions on ``k*h``.

    ``sum_k beta_k r[n-k]`` is then the exact delay convolution of the
    piecewise-linear interpolant of ``r``.  Delay mass beyond ``(n-1)*h`` is
    not represented (it never reaches the horizon).
    """
    if isinstance(model, Dirac):
        w = np.zeros(n + 1)
        q = model.tau / h
        k = round(q)
        if abs(q - k) <= 1e-9 * max(1.0, q):
            q = k  # on a node up to rounding of the grid
        j = int(math.floor(q))
        frac = q - j
        if j < n:
            w[j] = 1.0 - frac
            w[j + 1] = frac
        return w[:n]
    t = np.arange(n + 1, dtype=float) * h
    F = cdf(model, t)
    G = partial_mean(model, t)
    dF = np.diff(F)
    dG = np.diff(G)
    # mass of (t_k, t_{k+1}] weighted by (w - t_k)/h goes to node k+1, rest to node k
    up = (dG - t[:-1] * dF) / h
    down = dF - up
    w = np.zeros(n + 1)
    w[:-1] += down
    w[1:] += up
    w[0] += float(cdf(model, 0.0))
    return w[:n]


def from_dict(d: dict) -> DelayModel:
    d = dict(d)
    kind = str(d.pop("kind", "dirac")).lower()
    if kind == "dirac":
        m = Dirac(float(d.pop("tau", 0.0)))
    elif kind in ("truncated_exponential", "truncexp", "exponential"):
        if "c" not in d or "tau_max" not in d:
            raise DelayError("delay.c and delay.tau_max are required for a truncated exponential delay")
        m = TruncatedExponential(float(d.pop("c")), float(d.pop("tau_max")))
    else:
        raise DelayError(f"unknown delay.kind {kind!r}")
    if d:
        raise DelayError(f"unknown delay keys: {sorted(d)}")
    return m


def to_dict(model: DelayModel) -> dict:
    if isinstance(model, Dirac):
        return {"kind": "dirac", "tau": model.tau}
    return {"kind": "truncated_exponential", "c": model.c, "tau_max": model.tau_max}
