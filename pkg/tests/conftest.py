import numpy as np
import pytest

from checks import ACCEPTANCE_LINES
from slcrack.mesh import build_plate_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_mesh():
    return build_plate_mesh(2.0, 1.0, 1.0, 8, 4, 1.0)


@pytest.fixture(scope="session")
def bench_mesh():
    return build_plate_mesh(2.0, 1.0, 1.0, 64, 32, 2.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
