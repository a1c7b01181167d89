import numpy as np
import pytest

from haarsphere.sphere import build_partition


@pytest.fixture(scope="session")
def tree6():
    return build_partition(6)


@pytest.fixture(scope="session")
def tree4():
    return build_partition(4)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
