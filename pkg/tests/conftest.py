import math

import numpy as np
import pytest

from squintless import ArrayConfig, FrequencyGrid, UserGeometry
from squintless.channel import SPEED_OF_LIGHT

C = SPEED_OF_LIGHT
F0, FL, FC = 58.92e9, 61.08e9, 60e9
APERTURE = 100 * C / FC
D_MIN = C / (2 * F0)


@pytest.fixture
def geom():
    return UserGeometry(math.pi / 6, math.pi / 4, 10.0)


@pytest.fixture
def grid():
    return FrequencyGrid(F0, FL, 256, FC)


@pytest.fixture
def small_grid():
    return FrequencyGrid(F0, FL, 32, FC)


@pytest.fixture
def array16():
    return ArrayConfig(16, APERTURE, D_MIN)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
