"""Wasserstein-1 distances between equal-size uniform empirical measures.

The ground metric on (age, activity) pairs is taxicab, ``|x - x'| + |m - m'|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

ASSIGNMENT_CAP = 4096
BRUTEFORCE_CAP = 7
EXACT_POLISH_CAP = 64


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalMeasure:
    points: np.ndarray  # shape (n, 2): (age, activity)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise TransportError("an empirical measure needs an (n, 2) array with n >= 1")
        if np.any(p < 0):
            raise TransportError("coordinates must be non-negative")
        object.__setattr__(self, "points", p)

    @classmethod
    def from_snapshot(cls, ages, activity):
        """One point per neuron, the shared activity repeated in each pair."""
        ages = np.asarray(ages, dtype=float)
        return cls(np.column_stack([ages, np.full(ages.shape, float(activity))]))

    def __len__(self):
        return self.points.shape[0]


def _pts(a):
    if isinstance(a, EmpiricalMeasure):
        return a.points
    p = np.asarray(a, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    return p


def _same_size(a, b):
    if len(a) != len(b):
        raise TransportError(f"measures must have equal sizes ({len(a)} vs {len(b)})")
    if len(a) == 0:
        raise TransportError("measures must be non-empty")


def cost_matrix(a, b):
    a, b = _pts(a), _pts(b)
    return np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)


def matching_cost(a, b, perm) -> float:
    """``(1/n) sum_i d(a_i, b_perm(i))`` with a correctly rounded sum."""
    a, b = _pts(a), _pts(b)
    d = np.abs(a - b[np.asarray(perm)]).sum(axis=1)
    return math.fsum(d.tolist()) / len(a)


def w1_1d(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    _same_size(a, b)
    return math.fsum(np.abs(a - b).tolist()) / len(a)


def w1_assignment(a, b, cap: int = ASSIGNMENT_CAP) -> float:
    a, b = _pts(a), _pts(b)
    _same_size(a, b)
    if len(a) > cap:
        raise TransportError(f"n={len(a)} exceeds the assignment cap {cap}; subsample the measures")
    c = cost_matrix(a, b)
    rows, cols = linear_sum_assignment(c)
    perm = np.empty(len(a), dtype=int)
    perm[rows] = cols
    if len(a) <= EXACT_POLISH_CAP:
        perm = _exact_polish(c, perm)
    return matching_cost(a, b, perm)


def _exact_integers(c):
    """Scale a float matrix to Python ints without rounding (all doubles are dyadic)."""
    ratios = [v.as_integer_ratio() for v in c.ravel().tolist()]
    den = max(d for _, d in ratios)
    return [[num * (den // d) for num, d in ratios[i * c.shape[1]:(i + 1) * c.shape[1]]] for i in range(c.shape[0])]


def _exact_polish(c, perm):
    """Cancel negative cycles in exact arithmetic.

    The float solver can settle on a permutation that loses a near tie by an
    ulp; this makes the result optimal for the exact sum of the float costs.
    """
    cost = _exact_integers(c)
    n = len(perm)
    perm = [int(p) for p in perm]
    while True:
        # edge i -> k: row i takes the column of row k
        w = [[cost[i][perm[k]] - cost[k][perm[k]] for k in range(n)] for i in range(n)]
        dist = [0] * n
        pred = [-1] * n
        last = -1
        for _ in range(n):
            last = -1
            for i in range(n):
                di, wi = dist[i], w[i]
                for k in range(n):
                    if di + wi[k] < dist[k]:
                        dist[k] = di + wi[k]
                        pred[k] = i
                        last = k
            if last < 0:
                return np.array(perm)
        for _ in range(n):
            last = pred[last]
        cycle = [last]
        k = pred[last]
        while k != last:
            cycle.append(k)
            k = pred[k]
        # cycle lists rows k with pred[k] = next entry: each pred takes k's column
        old = {k: perm[k] for k in cycle}
        for k in cycle:
            perm[pred[k]] = old[k]


def w1_bruteforce(a, b) -> float:
    a, b = _pts(a), _pts(b)
    _same_size(a, b)
    n = len(a)
    if n > BRUTEFORCE_CAP:
        raise TransportError(f"brute force refused for n={n} > {BRUTEFORCE_CAP}")
    return min(matching_cost(a, b, p) for p in itertools.permutations(range(n)))


def w1(a, b, cap: int = ASSIGNMENT_CAP) -> float:
    """Exact taxicab W1.

    When each measure has a constant activity coordinate the cost separates
    into the 1D age distance plus the activity gap, which avoids the cubic
    assignment for large particle snapshots.
    """
    a, b = _pts(a), _pts(b)
    _same_size(a, b)
    if a.shape[1] == 2 and np.all(a[:, 1] == a[0, 1]) and np.all(b[:, 1] == b[0, 1]):
        # same rounding as matching_cost: one correctly rounded sum, one division
        gap = abs(float(a[0, 1]) - float(b[0, 1]))
        d = np.abs(np.sort(a[:, 0]) - np.sort(b[:, 0])) + gap
        return math.fsum(d.tolist()) / len(a)
    return w1_assignment(a, b, cap)
