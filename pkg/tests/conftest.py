from dataclasses import dataclass

import pytest

from momentchain.gbm import GbmParams
from momentchain.grid import make_two_sided, make_uniform


@dataclass
class GlobalData:
    complete: bool = None
    runs: int = None
    paths: int = None
    steps: int = None


global_data = GlobalData()


def pytest_addoption(parser):
    parser.addoption("--complete", action="store_true")


def pytest_configure(config):
    global_data.complete = config.getoption("complete")
    # Reduced Monte Carlo workload unless --complete is given.
    if global_data.complete:
        global_data.runs = 20
        global_data.paths = 10000
        global_data.steps = 10000
    else:
        global_data.runs = 4
        global_data.paths = 2000
        global_data.steps = 1000


@pytest.fixture(autouse=False)
def complete():
    return global_data.complete


@pytest.fixture(autouse=False)
def mc_runs():
    return global_data.runs


@pytest.fixture(autouse=False)
def mc_paths():
    return global_data.paths


@pytest.fixture(autouse=False)
def mc_steps():
    return global_data.steps


@pytest.fixture(autouse=False)
def gbm_params():
    return GbmParams(mu=2.0, sigma2=0.25, s0=1.0, tau=0.0002)


@pytest.fixture(autouse=False)
def two_sided():
    return make_two_sided(0.1, 0.01)


@pytest.fixture(autouse=False)
def equal_density():
    return make_uniform(20.0 / 11.0 * 0.01)
