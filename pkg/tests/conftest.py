"""Shared pytest plumbing: the acceptance-criteria summary block.

test_acceptance.py appends one line per criterion to ACCEPTANCE_LINES; the
terminal-summary hook prints them in a dedicated section at the end of the
run so the pass/fail record and measured values survive output capture.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
