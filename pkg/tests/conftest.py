import math

import numpy as np
import pytest
from hypothesis import settings

from rbolab.fourier import make_grid
from rbolab.waves import bbm_cnoidal, rbo_wave

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def rbo4():
    """rBO wave at c = 4, L = 2 pi on 256 points."""
    return rbo_wave(4.0, TWO_PI, make_grid(256, 2 * TWO_PI))


@pytest.fixture(scope="session")
def bbm05():
    """BBM plus-branch cnoidal wave at L = 8, k = 0.5 on 512 points."""
    return bbm_cnoidal(8.0, 0.5, make_grid(512, 8.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
