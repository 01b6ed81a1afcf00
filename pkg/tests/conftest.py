"""Prints one PASS/FAIL line per acceptance check at the end of the run."""

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        props = dict(report.user_properties)
        _ACCEPTANCE.append((props.get("label", report.nodeid.split("::")[-1]),
                            report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for label, outcome, detail in _ACCEPTANCE:
        tag = "PASS" if outcome == "passed" else "FAIL"
        line = f"{tag}  {label}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
