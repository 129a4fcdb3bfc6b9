import numpy as np
import pytest

from cmc_hyp import build_grid, make_params


@pytest.fixture(scope="session")
def grid16():
    return build_grid(16)


@pytest.fixture(scope="session")
def grid24():
    return build_grid(24)


@pytest.fixture(scope="session")
def params2():
    return make_params(2.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
