import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msrg.model import reference_params
from msrg.risk_neutral import reference_kernel, to_q

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def kernel(params):
    return reference_kernel(params)


@pytest.fixture(scope="session")
def qparams(params, kernel):
    return to_q(params, kernel)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
