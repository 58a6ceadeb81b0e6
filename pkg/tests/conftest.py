"""Shared test plumbing: collect one-line verdicts from the acceptance tests
and echo them in the terminal summary so every criterion's pass/fail line is
visible even with output capture enabled."""

import pytest

_CRITERION_LINES = []


@pytest.fixture
def criterion():
    """Record (and print) a single '[criterion NN] name: PASS/FAIL' line."""

    def record(line: str) -> None:
        _CRITERION_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
