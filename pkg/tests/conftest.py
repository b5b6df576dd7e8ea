import numpy as np
import pytest

from uavmfg.config import desk_scale_config
from uavmfg.env import SimModel
from uavmfg.meanfield import uniform_feasible


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_sim():
    return SimModel(desk_scale_config())


@pytest.fixture(scope="session")
def desk_mf(desk_sim):
    return uniform_feasible(desk_sim)
