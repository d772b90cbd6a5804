"""Shared element presets and sinusoids."""
import sys
from pathlib import Path

import pytest
from loguru import logger

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from reset_analysis.lti import Sinusoid  # noqa: E402
from reset_analysis.reset_core import make_fore, make_integrator, make_sore  # noqa: E402


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.remove()
    logger.add(sys.stderr, level="WARNING")
    yield


@pytest.fixture
def clegg():
    return make_integrator(1, 0.0)


@pytest.fixture
def fore():
    return make_fore(100.0, 0.0)


@pytest.fixture
def fore_half():
    return make_fore(100.0, 0.5)


@pytest.fixture
def sore():
    return make_sore(100.0, 0.1, 0.0)


@pytest.fixture
def drive_100():
    return Sinusoid(1.0, 100.0)
