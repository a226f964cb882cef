import numpy as np
import pytest

from runtumble import (ModelParams, PhaseGrid, SignPsi, steady_by_fixed_point)


@pytest.fixture(scope="session")
def params():
    return ModelParams(gamma=1.0, chi=0.8, psi=SignPsi())


@pytest.fixture(scope="session")
def small_grid():
    return PhaseGrid(x_max=40.0, v_max=8.0, nx=160, nv=48)


@pytest.fixture(scope="session")
def G_small(params, small_grid):
    res = steady_by_fixed_point(params, small_grid)
    assert np.all(res.G.values >= 0)
    return res.G


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
