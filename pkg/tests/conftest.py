"""Collects acceptance-criterion outcomes and prints them after the run."""

import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """``criterion(name, passed, detail)`` records one line for the summary
    and echoes it; the test still asserts on its own."""

    def record(name, passed, detail=""):
        line = f"CRITERION {name}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _RESULTS.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
