import time

import pytest

_START = time.perf_counter()
SUITE_BUDGET_S = 300.0


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    elapsed = time.perf_counter() - _START
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in RESULTS:
        tr.write_line(line)
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(f"{'PASS' if ok else 'FAIL'}  criterion 11 (runtime): full session {elapsed:.1f} s "
                  f"(budget {SUITE_BUDGET_S:.0f} s)")
