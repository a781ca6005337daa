import os

import pytest
from gmpy2 import mpc
from hypothesis import HealthCheck, settings

from equivmod.legendre import PullbackSampler, covering_data
from equivmod.numerics import DEFAULT_PRECISION, working_precision

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", "40")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _precision():
    with working_precision(DEFAULT_PRECISION):
        yield


@pytest.fixture(scope="session")
def legendre_pullback():
    with working_precision(DEFAULT_PRECISION):
        return PullbackSampler()


@pytest.fixture(scope="session")
def cover():
    with working_precision(DEFAULT_PRECISION):
        return covering_data()


def assert_close(a, b, tol):
    assert abs(a - b) <= tol, f"|{a} - {b}| = {abs(a - b)} > {tol}"


I = mpc(0, 1)
