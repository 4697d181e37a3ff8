# File: conftest.py
# Date: 16-10-2026
#
import pytest

from brillo.detector import reference_detector
from brillo.lineshape import reference_truth
from brillo.spectrum import synthesize
from brillo.trace import logger


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-size statistics and timing tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_logger():
    """Drop every sink the previous test (or the CLI) installed"""
    logger.remove()
    logger.add(lambda message: None, level="WARNING")
    yield
    logger.remove()


@pytest.fixture
def detector():
    return reference_detector()


@pytest.fixture
def truth():
    return reference_truth()


@pytest.fixture
def clean(truth, detector):
    return synthesize(truth, detector)
