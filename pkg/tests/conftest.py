import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from poscon import refcase

#: One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ref_agents():
    return refcase.agents()


@pytest.fixture(scope="session")
def ref_pattern():
    return refcase.pattern()

@pytest.fixture(scope="session")
def ref_graphs():
    return refcase.graphs()


@pytest.fixture(scope="session")
def agent_a(ref_agents):
    """First-class agent (3 states), labels 1, 2, 7."""
    return ref_agents[0]


@pytest.fixture(scope="session")
def agent_b(ref_agents):
    """Second-class agent (2 states), labels 3, 4."""
    return ref_agents[2]


@pytest.fixture(scope="session")
def agent_c(ref_agents):
    """Third-class agent (2 states), labels 5, 6, 8."""
    return ref_agents[4]


@pytest.fixture(scope="session")
def ref_gains():
    return refcase.synthesize_reference()
