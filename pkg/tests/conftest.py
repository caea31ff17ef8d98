import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from agenet import delays, intensity, laws
from agenet.engine import NetworkConfig

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def linear_rate():
    return intensity.IntensityModel(intensity.PurePower(1.0))


def threshold_rate(xi=2.0, x_star=0.5, slope_a=1.0, offset_b=0.5):
    return intensity.IntensityModel(intensity.PowerThreshold(xi, x_star, slope_a, offset_b))


def make_config(**kw):
    base = dict(
        n_neurons=50, alpha=1.0, epsilon=0.3, horizon=1.0,
        g0=laws.Uniform(0.0, 1.0), m0=laws.Dirac(1.0),
        intensity=linear_rate(), delay=delays.Dirac(0.0), seed=0,
    )
    base.update(kw)
    return NetworkConfig(**base)


def replace(cfg, **kw):
    return dataclasses.replace(cfg, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
