import os

import pytest
from hypothesis import HealthCheck, settings

from ssalt_mdpde.model import SIMULATION_PARAMS, SIMULATION_PROFILE

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def profile():
    return SIMULATION_PROFILE


@pytest.fixture
def params():
    return SIMULATION_PARAMS
