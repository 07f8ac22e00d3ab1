import re

_CRIT = re.compile(r"test_criterion_(\d+)")
_outcomes = {}


def pytest_runtest_logreport(report):
    m = _CRIT.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        if report.failed or n not in _outcomes:
            _outcomes[n] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    import acceptance_report

    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status = "PASS" if _outcomes[n] == "passed" else "FAIL"
        detail = acceptance_report.DETAILS.get(n, "")
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}".rstrip())
