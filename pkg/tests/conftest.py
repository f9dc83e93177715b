import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from photon_reshape import biphoton, fiber

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def default_fiber():
    return fiber.default_fiber()


@pytest.fixture(scope="session")
def small_jsa():
    """Degenerate source on a coarse 128-point grid, arrival times centred."""
    spec = biphoton.SpdcSpec()
    grid = biphoton.default_jsa_grid(spec, n=128)
    return biphoton.center_arrival_times(biphoton.build_jsa(spec, grid, grid))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
