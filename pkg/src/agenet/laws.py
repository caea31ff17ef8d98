"""Initial-condition laws for ages (g0) and activity (m0)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class LawError(ValueError):
    pass


@dataclass(frozen=True)
class Dirac:
    value: float

    def sample(self, n, rng):
        return np.full(n, float(self.value))

    @property
    def support_max(self):
        return float(self.value)

    def atoms(self):
        return [(float(self.value), 1.0)]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise LawError(f"Uniform law needs hi > lo, got [{self.lo}, {self.hi}]")

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, n)

    @property
    def support_max(self):
        return float(self.hi)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def atoms(self):
        return None


@dataclass(frozen=True)
class Discrete:
    values: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.values) != len(self.weights) or not self.values:
            raise LawError("Discrete law needs matching, non-empty values and weights")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, rel_tol=1e-12):
            raise LawError("Discrete weights must be non-negative and sum to 1")

    def sample(self, n, rng):
        idx = rng.choice(len(self.values), size=n, p=np.asarray(self.weights, dtype=float))
        return np.asarray(self.values, dtype=float)[idx]

    @property
    def support_max(self):
        return float(max(self.values))

    def atoms(self):
        return [(float(v), float(w)) for v, w in zip(self.values, self.weights)]


@dataclass(frozen=True)
class StretchedExp:
    """Density proportional to ``exp(-(x/scale)**power)`` on ``[0, cutoff]``.

    Has exponential moments of order ``power``; the cutoff is only there so
    that simulations stay on a finite age grid.
    """

    scale: float
    power: float
    cutoff: float

    def __post_init__(self):
        if not (self.scale > 0 and self.power > 0 and self.cutoff > 0):
            raise LawError("StretchedExp needs positive scale, power and cutoff")

    def _table(self):
        x = np.linspace(0.0, self.cutoff, 20001)
        p = np.exp(-((x / self.scale) ** self.power))
        c = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))])
        return x, c / c[-1]

    def sample(self, n, rng):
        x, c = self._table()
        return np.interp(rng.random(n), c, x)

    @property
    def support_max(self):
        return float(self.cutoff)

    def pdf(self, x):
        xt, c = self._table()
        norm = np.trapezoid(np.exp(-((xt / self.scale) ** self.power)), xt)
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= self.cutoff), np.exp(-((np.maximum(x, 0) / self.scale) ** self.power)) / norm, 0.0)

    def atoms(self):
        return None


@dataclass(frozen=True)
class Sampler:
    """Arbitrary sampler ``fn(n, rng)``; not representable on a PDE grid."""

    fn: Callable
    support_max: float = math.inf
    name: str = "sampler"

    def sample(self, n, rng):
        return np.asarray(self.fn(n, rng), dtype=float)

    def atoms(self):
        return None


Law = Dirac | Uniform | Discrete | StretchedExp | Sampler


def cell_masses(law: Law, x_grid: np.ndarray) -> np.ndarray:
    """Probability of each age cell, cell j being centred on ``x_grid[j]``.

    Point masses are put on the nearest node.  The result sums to 1.
    """
    dx = x_grid[1] - x_grid[0]
    out = np.zeros_like(x_grid)
    atoms = law.atoms()
    if atoms is not None:
        for v, w in atoms:
            j = int(round(v / dx))
            if j >= len(x_grid):
                raise LawError(f"initial age {v} lies beyond the age grid")
            out[j] += w
        return out
    if not hasattr(law, "pdf"):
        raise LawError(f"law {law!r} has no density and cannot be put on a grid")
    # cell average of the density by a 5-point rule within each cell
    offs = np.linspace(-0.5, 0.5, 5) * dx
    wts = np.array([1, 4, 2, 4, 1], dtype=float)  # composite Simpson on 4 subintervals
    wts /= wts.sum()
    vals = sum(w * law.pdf(x_grid + o) for o, w in zip(offs, wts))
    out = vals * dx
    total = out.sum()
    if total <= 0:
        raise LawError("law has no mass on the age grid")
    return out / total


def from_dict(d: dict) -> Law:
    d = dict(d)
    kind = str(d.pop("kind", "dirac")).lower()
    try:
        if kind == "dirac":
            law = Dirac(float(d.pop("value")))
        elif kind == "uniform":
            law = Uniform(float(d.pop("lo")), float(d.pop("hi")))
        elif kind == "discrete":
            law = Discrete(tuple(float(v) for v in d.pop("values")), tuple(float(w) for w in d.pop("weights")))
        elif kind in ("stretched_exp", "stretchedexp"):
            law = StretchedExp(float(d.pop("scale")), float(d.pop("power")), float(d.pop("cutoff")))
        else:
            raise LawError(f"unknown law kind {kind!r}")
    except KeyError as e:
        raise LawError(f"law of kind {kind!r} is missing key {e.args[0]!r}") from None
    if d:
        raise LawError(f"unknown law keys: {sorted(d)}")
    return law


def to_dict(law: Law) -> dict:
    if isinstance(law, Dirac):
        return {"kind": "dirac", "value": law.value}
    if isinstance(law, Uniform):
        return {"kind": "uniform", "lo": law.lo, "hi": law.hi}
    if isinstance(law, Discrete):
        return {"kind": "discrete", "values": list(law.values), "weights": list(law.weights)}
    if isinstance(law, StretchedExp):
        return {"kind": "stretched_exp", "scale": law.scale, "power": law.power, "cutoff": law.cutoff}
    return {"kind": "sampler", "name": law.name}
