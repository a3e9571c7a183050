import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def record(passed, line):
        text = f"{'PASS' if passed else 'FAIL'} {line}"
        ACCEPTANCE_LINES.append(text)
        print(text)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
