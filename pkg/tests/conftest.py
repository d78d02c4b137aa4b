import numpy as np
import pytest

from spsim.spectral import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, 16.0)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 16.0)


def plane_wave(grid, k_int):
    x, y, z = grid.coords
    kx, ky, kz = (grid.dk * v for v in k_int)
    return np.exp(1j * (kx * x + ky * y + kz * z)) / grid.box_length**1.5


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
