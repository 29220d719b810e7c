import re

import pytest

from lqlab import LqProblem


@pytest.fixture(scope="session")
def problem():
    return LqProblem()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m and rep.when == "call":
                rows.append((int(m.group(1)), outcome == "passed", rep.nodeid))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, ok, nodeid in sorted(rows):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'}  {name}")
