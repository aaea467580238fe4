import math

import pytest

from krein_spectra.models import build_interval, build_star_graph

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def interval():
    return build_interval(math.pi)


@pytest.fixture(scope="session")
def star3():
    return build_star_graph(3, math.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
