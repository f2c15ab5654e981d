import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, title, passed, detail, seconds)``."""

    def _report(number, title, passed, detail, seconds):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail}; {seconds:.3f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
