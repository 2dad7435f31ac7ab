import math
import os

import pytest
from hypothesis import HealthCheck, settings

from mmshare.model import make_system_preset

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def systems():
    return {k: make_system_preset(k) for k in ("sys1", "sys2", "sys3", "sys4")}


@pytest.fixture
def deg():
    return math.radians


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
