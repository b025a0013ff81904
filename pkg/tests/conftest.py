import time

import numpy as np
import pytest

from fikit import build_grid_1d, gaussian_measure

SESSION_START = time.perf_counter()
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("#")[1].split()[0])):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gauss601():
    space = build_grid_1d(-6, 6, 601)
    return space, gaussian_measure(space, 1.0)


@pytest.fixture(scope="session")
def gauss1201():
    space = build_grid_1d(-6, 6, 1201)
    return space, gaussian_measure(space, 1.0)


@pytest.fixture(scope="session")
def line401():
    space = build_grid_1d(-2, 2, 401)
    return space, space.coords[:, 0].copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(items):
    # the budget check has to see the whole session
    last = [it for it in items if it.name == "test_16_budget"]
    items[:] = [it for it in items if it.name != "test_16_budget"] + last
