"""Shared pytest plumbing: collect the acceptance-criterion PASS/FAIL lines
and echo them in the terminal summary (stdout of passing tests is captured,
so without this only failures would show their line)."""

CRITERION_LINES: list[str] = []


def record_criterion(line: str) -> None:
    CRITERION_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
