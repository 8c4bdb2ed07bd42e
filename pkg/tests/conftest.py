import math

import pytest

from qhe_fcs.engine import EngineParams


@pytest.fixture
def ref():
    """Balanced-coherence reference point with a finite geometric term."""
    return EngineParams(0.6, 1.6, 0.7, phi=math.pi / 2, p_h=0.5, p_c=0.5)


#: One line per acceptance criterion, echoed again in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
