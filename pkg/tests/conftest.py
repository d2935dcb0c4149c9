# tests/conftest.py
import pytest

from backend.services.rgg_model import GraphInstance
from tests.builders import random_instance


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run minutes-scale acceptance tests")
    parser.addoption("--paper-regime", action="store_true", default=False, help="run n = 2e6 paper-constant tests")


def pytest_collection_modifyitems(config, items):
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    skip_paper = pytest.mark.skip(reason="needs --paper-regime")
    for item in items:
        if "slow" in item.keywords and not config.getoption("--run-slow"):
            item.add_marker(skip_slow)
        if "paper_regime" in item.keywords and not config.getoption("--paper-regime"):
            item.add_marker(skip_paper)


@pytest.fixture
def small_instance() -> GraphInstance:
    return random_instance(300, 2.5, seed=3)


@pytest.fixture
def medium_instance() -> GraphInstance:
    return random_instance(2000, 6.0, seed=11)


@pytest.fixture
def square_instance() -> GraphInstance:
    return random_instance(400, 2.5, seed=5, metric="square")
