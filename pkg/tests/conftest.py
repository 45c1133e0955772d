import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines after the test summary.

    Captured stdout of passing tests is discarded, so the acceptance
    tests record their PASS/FAIL lines in a module-level list that is
    replayed here through the terminal reporter.
    """
    mod = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance")
    lines = getattr(mod, "VERDICT_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
