from __future__ import annotations

import pytest

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion; returns ``passed``."""

    def _record(num: int, title: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  criterion {num:2d}  {title}: {detail}"
        ACCEPTANCE[num] = line
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[num])
