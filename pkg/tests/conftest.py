import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record a PASS/FAIL line for the terminal summary, then return the verdict."""
    def record(criterion, ok, detail):
        _LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
