import math

import pytest

from hmflow.geometry import TargetSurfaceProfile
from hmflow.shooting import ShootSpec

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def sphere():
    return TargetSurfaceProfile.sphere()


@pytest.fixture(scope="session")
def base3(sphere):
    return ShootSpec(sphere, 3, 2, 0.0, 0.0)


@pytest.fixture(scope="session")
def base7(sphere):
    return ShootSpec(sphere, 7, 6, 0.0, 0.0)


@pytest.fixture(scope="session")
def window3(base3):
    """Three-profile window around the d = 3 equator with its sweep."""
    from hmflow.family import multiplicity_window

    return multiplicity_window(base3, math.pi / 2, 3)
