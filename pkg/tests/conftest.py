import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record ``(criterion, ok, detail)`` for the end-of-run acceptance block."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
