import functools

import pytest

from lrx.search import GraphIndex, bfs
from lrx.space import GraphSpec

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def bfs_table(kind: str, n: int):
    return bfs(GraphSpec(kind, n))


@functools.lru_cache(maxsize=None)
def graph_index(kind: str, n: int) -> GraphIndex:
    return GraphIndex(bfs_table(kind, n)[1])


@pytest.fixture
def table():
    return lambda n, kind="full": bfs_table(kind, n)[1]


@pytest.fixture
def index():
    return lambda n, kind="full": graph_index(kind, n)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
