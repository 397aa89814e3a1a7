from __future__ import annotations

import pytest

from affordbench.backends.oracle import OracleBackend
from affordbench.world import Block, EndEffector, Point2, WorldState


@pytest.fixture
def oracle() -> OracleBackend:
    return OracleBackend()


def make_state(blocks: list[tuple[str, float, float]], effector: tuple[float, float]) -> WorldState:
    return WorldState(
        tuple(Block(name, name.split()[0], Point2(x, y)) for name, x, y in blocks),
        EndEffector(Point2(*effector)),
    )


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
