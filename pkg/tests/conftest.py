import warnings

import pytest
from hypothesis import HealthCheck, settings

from tunnelpath import BarrierParams, WavePacketSpec

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def barrier():
    """gamma = 2, epsilon = 0.1 at k0 = 1."""
    return BarrierParams.from_dimensionless(2.0, 0.1)


@pytest.fixture
def narrow_packet(barrier):
    return WavePacketSpec(x0=-barrier.a - 250.0, k0=1.0, sigma_p=0.01)


@pytest.fixture
def free():
    return BarrierParams(0.0, 0.0)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
