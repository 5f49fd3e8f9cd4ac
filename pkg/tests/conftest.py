import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from witsolve import PARAMETER_SETS, build_strategy, hermite_rule, solve_levels  # noqa: E402

_CACHE = {}


def solved(tag):
    """Solve + tabulate one of the reference parameter sets once per session."""
    if tag not in _CACHE:
        params = PARAMETER_SETS[tag]
        rule = hermite_rule(7)
        result = solve_levels(params, rule)
        profile = build_strategy(params, rule, result=result)
        _CACHE[tag] = (params, rule, result, profile)
    return _CACHE[tag]


@pytest.fixture
def table4():
    return solved("table4")


@pytest.fixture
def table2():
    return solved("table2")


# criterion id -> list of (check, ok, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c.split()[0])):
        checks = ACCEPTANCE[cid]
        ok = all(c[1] for c in checks)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {cid}")
        for name, passed, detail in checks:
            tr.write_line(f"      [{'ok' if passed else 'XX'}] {name}: {detail}")
