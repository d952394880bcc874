import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_RESULTS: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion and return the verdict."""

    def _report(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_RESULTS[number] = line
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        line = ACCEPTANCE_RESULTS.get(number, f"criterion {number:2d}: FAIL  (no result recorded)")
        terminalreporter.write_line(line)
