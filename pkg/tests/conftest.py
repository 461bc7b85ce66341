import logging
import math

import numpy as np
import pytest

from qwitness.bath import BathSpec, SpectralDensity
from qwitness.hilbert import FockSpace
from qwitness.rates import suggested_grid_points, tabulate_rates

CYCLE = 2.0 * math.pi


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    # positivity / clipping chatter is exercised explicitly where needed
    logging.getLogger("qwitness").setLevel(logging.ERROR)
    yield


@pytest.fixture(scope="session")
def space():
    return FockSpace(20)


@pytest.fixture(scope="session")
def default_J():
    return SpectralDensity()


@pytest.fixture(scope="session")
def squeezed_bath():
    return BathSpec(kind="squeezed_vacuum", m=1, r0=1.0, alpha_exp=0.0)


@pytest.fixture(scope="session")
def thermal_bath():
    return BathSpec(kind="thermal", m=1, beta=math.inf)


@pytest.fixture(scope="session")
def squeezed_table(squeezed_bath, default_J):
    t_max = 1.0 * CYCLE
    return tabulate_rates(1, 1, squeezed_bath, default_J, t_max,
                          suggested_grid_points(1, t_max))


@pytest.fixture(scope="session")
def thermal_table(thermal_bath, default_J):
    t_max = 1.0 * CYCLE
    return tabulate_rates(1, 1, thermal_bath, default_J, t_max,
                          suggested_grid_points(1, t_max))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
