import math

import numpy as np
import pytest

from agenet import delays, engine, laws, meanfield_mc, pde, transport
from agenet.meanfield_mc import CouplingError, coupling_distance, coupling_distance_values, simulate_coupled

from conftest import linear_rate, make_config, replace, threshold_rate


def solve(cfg, dx=1e-3):
    return pde.picard_solve(pde.MeanFieldConfig.from_network(cfg), pde.PDEGrid(dx=dx))


def coupled_config(**kw):
    base = dict(n_neurons=100, epsilon=0.2, horizon=1.0, intensity=threshold_rate(), pin_m0=1.0,
                snapshot_grid=11, store_ages=True)
    base.update(kw)
    return make_config(**base)


@pytest.fixture(scope="module")
def base_mf():
    return solve(coupled_config())


class TestDistance:
    def test_definition(self):
        assert coupling_distance_values([1.0], [3.0], 2.0, 2.5) == 2.5

    def test_identical(self):
        x = np.array([0.2, 1.4, 3.0])
        assert coupling_distance_values(x, x.copy(), 1.0, 1.0) == 0.0

    def test_relabelling(self, base_mf):
        run = simulate_coupled(coupled_config(seed=4), base_mf)
        k = run.index(1.0)
        perm = np.random.default_rng(0).permutation(100)
        x, y = run.x_ages[k], run.y_ages[k]
        d = coupling_distance_values(x, y, None, m_gap=run.m_gap[k])
        assert coupling_distance_values(x[perm], y[perm], None, m_gap=run.m_gap[k]) == d


class TestCoupledRun:
    def test_decoupled_is_identical(self):
        cfg = coupled_config(epsilon=0.0, intensity=threshold_rate(), n_neurons=200)
        mf = solve(cfg)
        for seed in range(5):
            run = simulate_coupled(replace(cfg, seed=seed), mf)
            for t in run.times:
                assert coupling_distance(run, t) == 0.0
            assert run.copy_spikes == run.state.n_spikes == run.both_spikes

    def test_starts_glued(self, base_mf):
        run = simulate_coupled(coupled_config(seed=1), base_mf)
        assert coupling_distance(run, 0.0) == 0.0

    def test_copy_bound(self, base_mf):
        for seed in range(10):
            run = simulate_coupled(coupled_config(seed=seed), base_mf)
            assert run.copy_bound_violations == 0
            for t, y in zip(run.times, run.y_ages):
                assert np.all(y <= run.initial_ages + t)
            assert run.state.ratio_violations == 0

    def test_dominates_w1(self, base_mf):
        for seed in range(10):
            run = simulate_coupled(coupled_config(seed=seed), base_mf)
            for k, t in enumerate(run.times):
                mu = transport.EmpiricalMeasure.from_snapshot(run.x_ages[k], run.m_particle[k])
                eta = transport.EmpiricalMeasure.from_snapshot(run.y_ages[k], run.m_meanfield[k])
                assert transport.w1(mu, eta) <= coupling_distance(run, t) + 1e-12

    def test_mismatch(self, base_mf):
        with pytest.raises(CouplingError, match="epsilon"):
            simulate_coupled(coupled_config(epsilon=0.3), base_mf)
        with pytest.raises(CouplingError, match="pinned"):
            simulate_coupled(coupled_config(pin_m0=None), base_mf)
        with pytest.raises(CouplingError, match="horizon"):
            simulate_coupled(coupled_config(horizon=0.5), base_mf)

    def test_delayed_coupling_runs(self):
        cfg = coupled_config(delay=delays.TruncatedExponential(2.0, 0.5), n_neurons=200)
        mf = solve(cfg)
        run = simulate_coupled(cfg, mf)
        assert run.copy_bound_violations == 0
        assert engine.check_event_log(run.state.log, run.state.delay_vector, cfg.horizon) == []

    def test_particle_marginal(self, base_mf):
        cfg = coupled_config(n_neurons=50, snapshot_grid=2, store_ages=False)
        a = np.array([simulate_coupled(replace(cfg, seed=s), base_mf).state.n_spikes for s in range(300)])
        b = np.array([engine.simulate(replace(cfg, seed=10_000 + s)).state.n_spikes for s in range(300)])
        se = math.sqrt(a.var() / a.size + b.var() / b.size)
        assert abs(a.mean() - b.mean()) < 3 * se

    def test_copy_marginal(self, base_mf):
        cfg = coupled_config(n_neurons=400)
        ages = np.concatenate([simulate_coupled(replace(cfg, seed=s), base_mf).y_ages[-1] for s in range(25)])
        target = float((base_mf.final_density * base_mf.x_grid).sum() * base_mf.dx)
        assert abs(ages.mean() - target) < 3 * ages.std() / math.sqrt(ages.size)

    def test_trend(self):
        cfg = coupled_config(intensity=linear_rate(), snapshot_grid=2, store_ages=False)
        mf = solve(cfg)

        def mean_d(n):
            c = replace(cfg, n_neurons=n)
            return np.mean([coupling_distance(simulate_coupled(replace(c, seed=s), mf), 1.0) for s in range(50)])

        assert mean_d(100) > mean_d(1600)
