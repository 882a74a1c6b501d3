import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

RESULTS = []


def record(num, ok, detail):
    """Store one acceptance line; printed in the terminal summary."""
    line = f"CRITERION {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append((num, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(RESULTS):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
