import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from landau_lab.phase_space import PhaseGrid  # noqa: E402


@pytest.fixture(scope="session")
def vgrid16():
    return PhaseGrid(nx=1, nv=16)


@pytest.fixture(scope="session")
def vgrid24():
    return PhaseGrid(nx=1, nv=24)


@pytest.fixture(scope="session")
def small_grid():
    return PhaseGrid(nx=4, nv=12)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one line per acceptance criterion for the terminal summary."""
    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {detail}")
