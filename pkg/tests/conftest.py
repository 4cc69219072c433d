from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from helpers import make_data

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def small_data():
    return make_data()
