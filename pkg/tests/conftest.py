"""
Pytest configuration for knob_tuner tests.

This file is automatically loaded by pytest before running tests.
It keeps the Config singleton and the metrics registry from leaking between tests.
"""
import pytest

from knob_tuner.config.config import Config
from knob_tuner.metrics.tuner_metrics import reset_metrics


@pytest.fixture(autouse=True)
def fresh_singletons():
    Config._instance = None
    reset_metrics()
    yield
    Config._instance = None
    reset_metrics()
