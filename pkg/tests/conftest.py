#conftest.py

"""
Purpose:
- Shared fixtures and the `slow` marker for the test suites.
"""

import datetime as dt
import os
import sys

#Add src folder for referencing
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

import numpy as np
import pytest

from ingest.helpers import DayInstance
from model.helpers import StrategyKind, StrategySpec

SAMPLE_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'sample_data'))
ALL_KINDS = list(StrategyKind)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running check, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_day(L, G, house_ids=None, day=dt.date(2024, 7, 5)) -> DayInstance:
    L = np.array(L, dtype=np.int64)
    G = np.array(G, dtype=np.int64)
    if house_ids is None:
        house_ids = tuple(str(i + 1) for i in range(L.shape[0]))
    return DayInstance(house_ids, L, G, day=day)


def random_day(rng, n_houses: int, n_steps: int, top: int = 4000) -> DayInstance:
    return make_day(rng.integers(0, top + 1, size=(n_houses, n_steps)),
                    rng.integers(0, top + 1, size=(n_houses, n_steps)))


@pytest.fixture
def share_day() -> DayInstance:
    """Two houses, four steps: 1 kWh and 2 kWh of load per step, 1 kWh of PV each."""
    return make_day([[1000] * 4, [2000] * 4], [[1000] * 4, [1000] * 4])


@pytest.fixture
def share_spec():
    def _spec(kind: StrategyKind, **kwargs) -> StrategySpec:
        return StrategySpec(kind, min_up=2, min_down=1, **kwargs)
    return _spec


@pytest.fixture
def midday_day() -> DayInstance:
    """One house, PV only in the two middle steps."""
    return make_day([[1000] * 4], [[0, 2000, 2000, 0]])


@pytest.fixture
def sample_dir() -> str:
    return SAMPLE_DIR
