"""Shared pytest fixtures: seeded generators, random states and small lattices"""

import numpy as np
import pytest

from lattice import build_cubic, build_toric
from statevec import DensityMatrix, StateVector


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_state(rng):
    return StateVector.random(4, rng)


@pytest.fixture
def random_rho(rng):
    return DensityMatrix.random(4, rng).matrix


@pytest.fixture
def toric2():
    return build_toric(2)


@pytest.fixture
def toric3():
    return build_toric(3)


@pytest.fixture
def cubic221():
    return build_cubic(2, 2, 1)
