import os

import pytest
from hypothesis import HealthCheck, settings

from ziglin import kernel

settings.register_profile(
    "default", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = kernel.available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
