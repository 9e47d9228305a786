import time

import pytest

ACCEPTANCE_LINES = []


class Criterion:
    """Runs one acceptance criterion, times it and records a PASS/FAIL line."""

    def __init__(self, number, name, limit=None):
        self.number, self.name, self.limit = number, name, limit

    def run(self, body):
        start = time.perf_counter()
        try:
            ok, detail = body()
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        if self.limit is not None and elapsed >= self.limit:
            ok, detail = False, f"{detail}; over the {self.limit:g} s limit"
        limit = f" limit {self.limit:g} s" if self.limit is not None else ""
        line = f"{'PASS' if ok else 'FAIL'} [{self.number}] {self.name}: {detail} ({elapsed:.2f} s{limit})"
        ACCEPTANCE_LINES.append((self.number, line))
        print(line)
        assert ok, line


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
