import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

REPO = Path(__file__).resolve().parents[1]
CACHE_DIR = os.environ.get("PARCOV_CACHE", str(REPO / ".cache"))


@pytest.fixture(scope="session")
def cache_dir():
    return CACHE_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
