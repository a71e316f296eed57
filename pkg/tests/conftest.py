import numpy as np
import pytest

from oldb2d import make_grid

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, TWO_PI)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64, TWO_PI)
