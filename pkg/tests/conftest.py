import numpy as np
import pytest

from afree.dsl import parse_operator


@pytest.fixture
def worked_op():
    return parse_operator("D[1,0] u1 + D[0,1] u1 + D[0,2] u1 = 0")


@pytest.fixture
def sum_op():
    return parse_operator("D[1,0] u1 + D[1,0] u2 = 0")


@pytest.fixture
def divergence_op():
    return parse_operator("D[1,0] u1 + D[0,1] u2 = 0")


@pytest.fixture
def transport_op():
    return parse_operator("D[1,0] u1 = 0")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(number, passed, detail):
        lines.append((number, f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
