import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene  # noqa: E402

# ideal scene tuned for a 3 kHz radial trap at a 1 G bottom
G_REF = 23.513
B_I_REF = 1e-4


@pytest.fixture
def ideal_scene():
    return StaticScene([IdealIoffeQuad(G_REF, B_I_REF)], gravity=(0.0, 0.0, 0.0))


@pytest.fixture
def ideal_scene_gravity():
    return StaticScene([IdealIoffeQuad(G_REF, B_I_REF)])


@pytest.fixture
def unit_scene():
    return StaticScene([IdealIoffeQuad(1.0, 1e-4)], gravity=(0.0, 0.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def linear_drive(amplitude, angle, freq_hz):
    return RfDrive.linear(amplitude, angle, 2 * np.pi * freq_hz)


ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one acceptance criterion; the line is printed now and again in the summary."""

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
