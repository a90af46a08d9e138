def pytest_terminal_summary(terminalreporter):
    """Print the acceptance PASS/FAIL lines after the run, independent of output capture."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
