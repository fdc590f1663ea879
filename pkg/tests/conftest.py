"""Shared pytest hooks: surface the acceptance-check outcome lines.

Output capture would otherwise swallow the per-check PASS/FAIL lines on
success, so the acceptance tests append them here and we replay them in the
terminal summary.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
