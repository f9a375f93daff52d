"""Shared test plumbing: surface acceptance criterion verdicts in the summary.

The acceptance module records one line per criterion here; the hook prints
them after the run so they appear even under default output capture.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
