ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    results = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "error":
                continue
            nodeid = getattr(report, "nodeid", "")
            if ACCEPTANCE_FILE not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            label = name.removeprefix("test_").replace("_", " ")
            results.append((label, "PASS" if outcome == "passed" else "FAIL"))
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for label, status in sorted(results):
            terminalreporter.write_line(f"[acceptance] {label}: {status}")
