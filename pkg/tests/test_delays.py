import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from agenet import delays
from agenet.delays import DelayError, Dirac, TruncatedExponential


class TestSample:
    def test_dirac(self, rng):
        np.testing.assert_array_equal(delays.sample_delays(Dirac(0.5), 3, rng), [0.5, 0.5, 0.5])
        assert not np.any(delays.sample_delays(Dirac(0.0), 1000, rng))

    def test_truncated_exponential_mean(self):
        num, _ = integrate.quad(lambda s: s * math.exp(-s), 0, 2)
        den, _ = integrate.quad(lambda s: math.exp(-s), 0, 2)
        oracle = num / den
        assert oracle == pytest.approx((1 - 3 * math.exp(-2)) / (1 - math.exp(-2)), rel=1e-12)
        model = TruncatedExponential(1.0, 2.0)
        s = delays.sample_delays(model, 10**6, np.random.default_rng(7))
        assert abs(s.mean() - oracle) < 3e-3
        assert delays.mean(model) == pytest.approx(oracle, rel=1e-12)

    def test_ks_against_cdf(self):
        model = TruncatedExponential(1.5, 1.2)
        s = delays.sample_delays(model, 10**6, np.random.default_rng(11))
        res = stats.kstest(s, lambda v: delays.cdf(model, v))
        assert res.statistic < 0.002

    def test_seeded(self):
        m = TruncatedExponential(2.0, 1.0)
        a = delays.sample_delays(m, 50, np.random.default_rng(3))
        b = delays.sample_delays(m, 50, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_needs_one(self, rng):
        with pytest.raises(DelayError):
            delays.sample_delays(Dirac(0.0), 0, rng)

    @given(st.floats(0.01, 20.0), st.floats(0.01, 10.0), st.integers(0, 2**32 - 1))
    def test_support_exact(self, c, tau_max, seed):
        m = TruncatedExponential(c, tau_max)
        s = delays.sample_delays(m, 500, np.random.default_rng(seed))
        assert np.all(s >= 0) and np.all(s <= delays.support_bound(m))


class TestSupportBound:
    def test_values(self):
        assert delays.support_bound(Dirac(0.5)) == 0.5
        assert delays.support_bound(TruncatedExponential(1.0, 2.0)) == 2.0
        assert delays.support_bound(Dirac(0.0)) == 0.0

    def test_invalid(self):
        with pytest.raises(DelayError):
            Dirac(-0.1)
        with pytest.raises(DelayError):
            TruncatedExponential(0.0, 1.0)
        with pytest.raises(DelayError):
            TruncatedExponential(1.0, math.inf)


class TestHatWeights:
    @pytest.mark.parametrize("model", [Dirac(0.0), Dirac(0.25), Dirac(0.3333), TruncatedExponential(3.0, 0.7)])
    def test_mass_and_mean(self, model):
        h, n = 0.01, 200
        w = delays.hat_weights(model, h, n)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= -1e-15)
        # linear functions are convolved exactly
        assert (np.arange(n) * h * w).sum() == pytest.approx(delays.mean(model), abs=1e-12)

    def test_dirac_on_node(self):
        w = delays.hat_weights(Dirac(0.05), 0.01, 20)
        assert w[5] == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(np.abs(w) > 1e-12) == 1


def test_dict_round_trip():
    for m in (Dirac(0.0), Dirac(0.3), TruncatedExponential(2.0, 1.5)):
        assert delays.from_dict(delays.to_dict(m)) == m
    with pytest.raises(DelayError, match="tau_max"):
        delays.from_dict({"kind": "truncated_exponential", "c": 1.0})
