import numpy as np
import pytest

from simrsma.config import SystemConfig
from simrsma.geometry import realize


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_config():
    return SystemConfig(num_users=2, layers=2, atoms_per_layer=4)


@pytest.fixture(scope="session")
def small_channel(small_config):
    return realize(small_config, 7)


@pytest.fixture(scope="session")
def desk_config():
    return SystemConfig()


@pytest.fixture(scope="session")
def desk_channel(desk_config):
    return realize(desk_config, 3)


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config._acceptance_lines

    def log(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        return passed
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
