import numpy as np
import pytest

from sfexcite import (
    InitialState,
    NarxConfig,
    Region,
    hammerstein_plant,
    lti_from_time_constant,
)


@pytest.fixture
def narx():
    return NarxConfig(n_u=1, n_y=1, m=1, T_s=1.0)


@pytest.fixture
def unit_input_region():
    return Region.unit(1)


@pytest.fixture
def unit_state_region():
    return Region.unit(2)


@pytest.fixture
def lti():
    return lti_from_time_constant(T=5.0, K=1.0, T_s=1.0)


@pytest.fixture
def plant():
    return hammerstein_plant()


def central_difference(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g
