import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import make_graph  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cycle6():
    # v0 w0 v1 w1 v2 w2 v0
    return make_graph([(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (0, 2)])


@pytest.fixture
def path6():
    # v0 w0 v1 w1 v2 w2
    return make_graph([(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)])


@pytest.fixture
def k33():
    return make_graph([(u, i) for u in range(3) for i in range(3)])


@pytest.fixture
def cycle6_chord():
    # the 6-cycle plus chord v0-w1
    return make_graph([(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (0, 2), (0, 1)])
