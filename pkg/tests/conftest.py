import numpy as np
import pytest

from ordfix import GridFunction

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid():
    def make(func, n=100):
        return GridFunction.from_callable(func, n)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
