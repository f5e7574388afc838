"""Shared fixtures: the acceptance-criteria reporter."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record and print one PASS/FAIL line per acceptance criterion.

    Lines are echoed immediately (visible in captured output) and replayed
    in a terminal section after the run so they survive output capture.
    """

    def _report(num: int, ok: bool, desc: str) -> None:
        line = f"ACCEPTANCE {num} {'PASS' if ok else 'FAIL'}: {desc}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
