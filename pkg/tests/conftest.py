import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from photon_tam import states as st

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_STATES = {}


def gaussian(a, shape=st.DEFAULT_SHAPE):
    key = (a, tuple(shape))
    if key not in _STATES:
        _STATES[key] = st.gaussian_state(a, st.auto_grid(a, shape))
    return _STATES[key]


@pytest.fixture(scope="session")
def psi01():
    return gaussian(0.1)


@pytest.fixture(scope="session")
def psi05():
    return gaussian(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{desc} [{'ok' if passed else 'FAILED'}]" for desc, passed in checks)
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        CRITERIA[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
