"""Convergence studies across system sizes and rate fits.

For every ``N`` a batch of coupled runs (particles + mean-field copies) is
simulated with seeds derived from one master seed; the coupling distance and
two W1 distances are evaluated at the final time:

* ``W1(mu_N, eta_N)``: particles against their own coupled copies,
* ``W1(mu_N, mf sample)``: particles against an i.i.d. sample of the PDE law.

Replicas may run in worker processes; results are reduced in sorted
``(N, replica)`` order so the report does not depend on scheduling.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import laws, meanfield_mc, pde, transport
from .engine import NetworkConfig


class StudyError(RuntimeError):
    pass


def derive_seed(master: int, *keys: int) -> int:
    """``SeedSequence(master, spawn_key=keys).generate_state(1, uint64)[0]``."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


M0_STREAM = 2**32 - 1


def pinned_m0(config: NetworkConfig, master_seed: int) -> float:
    """Activity at t=0 shared by every replica of a study."""
    if isinstance(config.m0, laws.Dirac):
        return float(config.m0.value)
    rng = np.random.default_rng(derive_seed(master_seed, M0_STREAM))
    return float(config.m0.sample(1, rng)[0])


def default_replicas(n: int) -> int:
    return 20 if n <= 800 else 10


@dataclass(frozen=True)
class ReplicaResult:
    n: int
    replica: int
    seed: int
    times: tuple
    distance: tuple
    m_gap: tuple
    w1_eta: tuple
    w1_meanfield: tuple
    spikes: int
    copy_spikes: int


@dataclass
class RateFit:
    column: str
    slope: float
    slope_se: float
    intercept: float
    loglog_residual: float
    scale_c: float
    scaled_residual: float


@dataclass
class ConvergenceReport:
    n_list: list
    eval_time: float
    master_seed: int
    rows: list
    fits: Optional[RateFit] = None
    pinned_m0: float = 0.0
    replicas: list = field(default_factory=list)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_json(self) -> str:
        d = {
            "n_list": list(self.n_list),
            "eval_time": self.eval_time,
            "master_seed": self.master_seed,
            "pinned_m0": self.pinned_m0,
            "rows": self.rows,
            "fits": None if self.fits is None else dataclasses.asdict(self.fits),
        }
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["N,mean_D,se_D,mean_W1,se_W1"]
        for r in self.rows:
            lines.append(",".join(repr(v) for v in (r["N"], r["mean_D"], r["se_D"], r["mean_W1"], r["se_W1"])))
        return "\n".join(lines) + "\n"

    def replicas_csv(self) -> str:
        lines = ["N,replica,seed,t,distance,m_gap,w1_eta,w1_meanfield"]
        for rep in self.replicas:
            for k, t in enumerate(rep.times):
                lines.append(",".join(repr(v) for v in (
                    rep.n, rep.replica, rep.seed, t, rep.distance[k], rep.m_gap[k], rep.w1_eta[k], rep.w1_meanfield[k])))
        return "\n".join(lines) + "\n"


# worker-side state: the mean-field solution is shared read-only
_MF: Optional[pde.MeanFieldSolution] = None


def _init_worker(mf):
    global _MF
    _MF = mf


def _eval_times(T, three_times):
    return (T / 3, 2 * T / 3, T) if three_times else (T,)


def run_replica(config: NetworkConfig, replica: int, mf: pde.MeanFieldSolution, eval_times) -> ReplicaResult:
    run = meanfield_mc.simulate_coupled(config, mf)
    sample_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(5)[4])
    dist, gaps, w_eta, w_mf = [], [], [], []
    for t in eval_times:
        k = run.index(t)
        x, y = run.x_ages[k], run.y_ages[k]
        dist.append(meanfield_mc.coupling_distance(run, t))
        gaps.append(float(run.m_gap[k]))
        mu = transport.EmpiricalMeasure.from_snapshot(x, run.m_particle[k])
        eta = transport.EmpiricalMeasure.from_snapshot(y, run.m_meanfield[k])
        w_eta.append(transport.w1(mu, eta))
        z = mf.sample_ages(config.n_neurons, sample_rng, t=None if t == config.horizon else t)
        ref = transport.EmpiricalMeasure.from_snapshot(z, float(mf.activity_at(t)))
        w_mf.append(transport.w1(mu, ref))
    return ReplicaResult(
        n=config.n_neurons, replica=replica, seed=config.seed, times=tuple(float(t) for t in eval_times),
        distance=tuple(dist), m_gap=tuple(gaps), w1_eta=tuple(w_eta), w1_meanfield=tuple(w_mf),
        spikes=run.state.n_spikes, copy_spikes=run.copy_spikes,
    )


def _task(args):
    config, replica, eval_times = args
    try:
        return run_replica(config, replica, _MF, eval_times)
    except Exception as e:  # surface which replica failed
        raise StudyError(f"replica failed (N={config.n_neurons}, seed={config.seed}): {e}") from e


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def run_convergence_study(
    base: NetworkConfig,
    n_list: Sequence[int],
    replicas=None,
    eval_time: Optional[float] = None,
    master_seed: int = 0,
    grid: pde.PDEGrid = pde.PDEGrid(),
    workers: int = 1,
    three_times: bool = False,
    snapshot_grid: int = 13,
    mf: Optional[pde.MeanFieldSolution] = None,
) -> ConvergenceReport:
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise StudyError("n_list must be strictly increasing with at least 2 entries")
    if replicas is None:
        counts = {n: default_replicas(n) for n in n_list}
    elif isinstance(replicas, dict):
        counts = {n: int(replicas[n]) for n in n_list}
    else:
        counts = {n: int(replicas) for n in n_list}
    if min(counts.values()) < 2:
        raise StudyError("at least 2 replicas per N are needed for a standard error")
    T = base.horizon if eval_time is None else float(eval_time)
    if abs(T - base.horizon) > 1e-12:
        base = dataclasses.replace(base, horizon=T)

    m0 = pinned_m0(base, master_seed)
    # grid divisible into thirds so the optional extra times are snapshot times
    base = dataclasses.replace(base, pin_m0=m0, snapshot_grid=snapshot_grid, store_ages=False)
    if mf is None:
        mf = pde.picard_solve(pde.MeanFieldConfig.from_network(base, m0), grid)
    times = _eval_times(T, three_times)

    tasks = []
    for n in n_list:
        for r in range(counts[n]):
            cfg = dataclasses.replace(base, n_neurons=n, seed=derive_seed(master_seed, n, r))
            tasks.append((cfg, r, times))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(mf,)) as ex:
            results = list(ex.map(_task, tasks, chunksize=1))
    else:
        _init_worker(mf)
        results = [_task(t) for t in tasks]
    results.sort(key=lambda r: (r.n, r.replica))

    rows = []
    k_final = len(times) - 1
    for n in n_list:
        reps = [r for r in results if r.n == n]
        mD, sD = _mean_se([r.distance[k_final] for r in reps])
        mW, sW = _mean_se([r.w1_meanfield[k_final] for r in reps])
        mE, sE = _mean_se([r.w1_eta[k_final] for r in reps])
        mG, sG = _mean_se([r.m_gap[k_final] for r in reps])
        row = {"N": n, "replicas": len(reps), "mean_D": mD, "se_D": sD, "mean_W1": mW, "se_W1": sW,
               "mean_W1_eta": mE, "se_W1_eta": sE, "mean_m_gap": mG, "se_m_gap": sG}
        if three_times:
            row["by_time"] = {
                repr(t): {"mean_D": _mean_se([r.distance[k] for r in reps])[0],
                          "mean_W1": _mean_se([r.w1_meanfield[k] for r in reps])[0]}
                for k, t in enumerate(times)
            }
        rows.append(row)

    report = ConvergenceReport(n_list=n_list, eval_time=T, master_seed=master_seed, rows=rows,
                               pinned_m0=m0, replicas=results)
    if len(n_list) >= 3:
        report.fits = fit_rate(report)
    return report


def fit_rate_values(n, d, column="mean_D") -> RateFit:
    """Least-squares fits of ``log d`` against ``log n`` and of ``d = c log(1+n)/sqrt(n)``."""
    n = np.asarray(n, dtype=float)
    d = np.asarray(d, dtype=float)
    if len(n) < 3:
        raise StudyError("a rate fit needs at least 3 system sizes")
    if np.any(d <= 0):
        raise StudyError(f"cannot fit a power law to non-positive values in {column}")
    lx, ly = np.log(n), np.log(d)
    lr = stats.linregress(lx, ly)
    res = ly - (lr.intercept + lr.slope * lx)
    g = np.log1p(n) / np.sqrt(n)
    c = float(np.dot(d, g) / np.dot(g, g))
    scaled = float(np.linalg.norm(d - c * g) / np.linalg.norm(d))
    return RateFit(
        column=column,
        slope=float(lr.slope),
        slope_se=float(lr.stderr),
        intercept=float(lr.intercept),
        loglog_residual=float(np.sqrt(np.mean(res**2))),
        scale_c=c,
        scaled_residual=scaled,
    )


def fit_rate(report: ConvergenceReport) -> RateFit:
    """Fit on the coupling distance, or on the W1 column when some mean distance is zero."""
    n = report.column("N")
    d = report.column("mean_D")
    if np.all(d > 0):
        return fit_rate_values(n, d, "mean_D")
    return fit_rate_values(n, report.column("mean_W1"), "mean_W1")
