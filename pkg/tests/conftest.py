import numpy as np
import pytest

from chemotax.greens import GreenOperator
from chemotax.grid import make_disk_grid, make_rectangle_grid
from chemotax.measure import make_measure


@pytest.fixture(scope="session")
def square64():
    return make_rectangle_grid(64, 64)


@pytest.fixture(scope="session")
def green64(square64):
    return GreenOperator(square64)


@pytest.fixture(scope="session")
def square32():
    return make_rectangle_grid(32, 32)


@pytest.fixture(scope="session")
def green32(square32):
    return GreenOperator(square32)


@pytest.fixture(scope="session")
def disk256():
    return make_disk_grid(256, 1.0)


@pytest.fixture(scope="session")
def green_disk256(disk256):
    return GreenOperator(disk256)


@pytest.fixture(scope="session")
def disk128():
    return make_disk_grid(128, 1.0)


@pytest.fixture(scope="session")
def green_disk128(disk128):
    return GreenOperator(disk128)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def delta_one():
    return make_measure([(1.0, 1.0)])


@pytest.fixture(scope="session")
def attract_repel():
    return make_measure([(1.0, 0.5), (-1.0, 0.5)])


@pytest.fixture(scope="session")
def two_positive():
    return make_measure([(1.0, 0.5), (0.5, 0.5)])
