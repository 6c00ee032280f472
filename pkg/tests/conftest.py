import numpy as np
import pytest

from nlsplit.grid import ComplexField, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid, rng, *, real=False):
    v = rng.normal(size=grid.shape)
    if not real:
        v = v + 1j * rng.normal(size=grid.shape)
    return ComplexField(grid, v)


@pytest.fixture
def grid1():
    return make_grid(1, 64, np.pi)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
