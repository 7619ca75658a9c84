import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nhcse.lattice import build_haldane, build_honeycomb

settings.register_profile("nhcse", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nhcse")


@pytest.fixture(scope="session")
def torus2():
    return build_honeycomb(2, 2, "periodic", "periodic", "torus")


@pytest.fixture(scope="session")
def cylinder():
    """Small zigzag cylinder, periodic along x."""
    return build_honeycomb(6, 6, "periodic", "open", "zigzag")


@pytest.fixture(scope="session")
def haldane_cylinder(cylinder):
    return build_haldane(cylinder, 1.0, 0.2, np.pi / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(REPORT):
            terminalreporter.write_line(REPORT[n])
