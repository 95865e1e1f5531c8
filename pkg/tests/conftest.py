import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE_LINES: list[str] = []


def acceptance_report(name: str, ok: bool, detail: str, expected_failure: bool = False):
    """Record one acceptance line; printed in the terminal summary and to stdout."""
    status = "PASS" if ok else ("FAIL (expected, see notes)" if expected_failure else "FAIL")
    line = f"[acceptance {name}] {status}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
