"""Shared pytest wiring.

Collects one-line verdicts from the acceptance tests and prints them as a
dedicated section of the terminal summary.
"""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_ledger():
    """Callable recording a single acceptance verdict line."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
