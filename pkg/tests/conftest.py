"""Echo the acceptance-criteria verdict lines after the test run.

Pytest captures test stdout at the file-descriptor level, so the one-line
[PASS]/[FAIL] verdicts from test_acceptance would otherwise only surface
for failing tests.  The terminal summary is never captured.
"""


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
