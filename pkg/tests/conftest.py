import contextlib

import pytest

from oaival.simulator import FaultProfile, SimulatorServer
from oaival.transport import RetryPolicy

# Short timeouts keep the no_response profile quick on loopback.
FAST_POLICY = RetryPolicy(request_timeout=1.0, overall_deadline=30.0)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def simulator():
    """Factory: ``with simulator("empty_window") as sim: ...``"""
    stack = contextlib.ExitStack()

    def start(*flags, **kwargs):
        return stack.enter_context(SimulatorServer(FaultProfile.from_flags(flags), **kwargs))

    with stack:
        yield start


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
