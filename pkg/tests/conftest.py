import numpy as np
import pytest

from shapedpolar.reliability import default_order


@pytest.fixture(scope="session")
def order_256():
    return default_order(256)


@pytest.fixture(scope="session")
def order_1024():
    return default_order(1024)


@pytest.fixture()
def gen():
    return np.random.default_rng(0xC0FFEE)
