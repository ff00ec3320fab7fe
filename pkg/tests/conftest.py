import re
import sys

_OUTCOMES: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m and (report.when == "call" or report.outcome != "passed"):
        k = int(m.group(1))
        if report.when == "call" or k not in _OUTCOMES:
            _OUTCOMES[k] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    mod = sys.modules.get("test_acceptance")
    details = getattr(mod, "DETAILS", {})
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        terminalreporter.write_line(f"criterion {k:2d}: {_OUTCOMES[k]}  {details.get(k, '')}")
