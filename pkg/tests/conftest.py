import numpy as np
import pytest

from network.models import NetworkConfig
from plant_data.generator import generate_dataset
from plant_data.models import GeneratorConfig
from plant_data.services import prepare_dataset


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_generator_config():
    # 2 steady runs + 3 classes x 2 severities = 8 scenarios of 6 variables
    return GeneratorConfig(n_severities=2, steady_runs=2, n_vars=6, n_steps=60, onset_step=20, seed=7)


@pytest.fixture
def small_series(small_generator_config):
    return generate_dataset(small_generator_config)


@pytest.fixture
def small_dataset(small_series):
    # Width 16, step 4 -> 12 windows per scenario
    return prepare_dataset(small_series, width=16, step=4, noise_fraction=0.05, ratios=(6, 2, 2), seed=3)


@pytest.fixture
def tiny_net_config():
    return NetworkConfig(
        n_vars=3, window_width=8, tcn_channels=4, tcn_kernel_size=2, tcn_dilations=[1, 2],
        dropout_rate=0.0, attention_dim=2, res_kernel_size=2,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
