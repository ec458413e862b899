"""Shared pytest plumbing.

The acceptance suite records one verdict line per criterion; the
terminal summary reprints them all after the run so the pass/fail
status of every criterion is visible regardless of capture settings.
"""
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
