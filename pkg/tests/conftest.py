import numpy as np
import pytest

from nlcalderon.grid import BoundaryFunction, GridFunction, build_grid

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid33():
    return build_grid(33, 33)


@pytest.fixture(scope="session")
def grid17():
    return build_grid(17, 17)


def bump(X, Y, c=(0.5, 0.5), s=50.0):
    return np.exp(-s * ((X - c[0]) ** 2 + (Y - c[1]) ** 2))


def const(grid, c=1.0):
    return GridFunction.constant(grid, c)


def trace(grid, fn):
    return BoundaryFunction.from_function(grid, fn)
