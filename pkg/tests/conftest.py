import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from multiloc.core import SceneConfig

settings.register_profile(
    "multiloc",
    deadline=None,
    max_examples=int(os.environ.get("HYPOTHESIS_MAX_EXAMPLES", "40")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("multiloc")


@pytest.fixture(scope="session")
def scene():
    return SceneConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
