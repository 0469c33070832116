"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import re

_OUTCOMES = {}
_TITLES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", item.nodeid)
        if m:
            _TITLES[int(m.group(1))] = m.group(2).replace("_", " ")


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = _OUTCOMES.get(k, "PASS")
        _OUTCOMES[k] = "PASS" if (report.passed and prev == "PASS") else (
            "SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        terminalreporter.write_line(f"criterion {k}: {_OUTCOMES[k]}  ({_TITLES.get(k, '')})")
