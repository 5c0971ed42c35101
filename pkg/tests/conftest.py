import pytest

from implab import DEFAULT_MAP, DEFAULT_REGIONS
from implab.suite import warm_up


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    # compile every jit signature once so individual tests (and the
    # timed acceptance runs) measure the algorithms, not the compiler
    warm_up(DEFAULT_MAP)


@pytest.fixture(scope="session")
def default_map():
    return DEFAULT_MAP


@pytest.fixture(scope="session")
def regions():
    return DEFAULT_REGIONS
