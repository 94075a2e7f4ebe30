"""Per-criterion pass/fail summary for tests marked ``criterion(n, title)``."""

from collections import defaultdict

_titles = {}
_outcomes = defaultdict(dict)  # criterion -> {nodeid: passed}
_criterion_of = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is None:
            continue
        n, title = mark.args
        _titles[n] = title
        _criterion_of[item.nodeid] = n


def pytest_runtest_logreport(report):
    n = _criterion_of.get(report.nodeid)
    if n is None:
        return
    if report.when == "call" or report.failed:
        prev = _outcomes[n].get(report.nodeid, True)
        _outcomes[n][report.nodeid] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        ok = sum(results.values())
        verdict = "PASS" if ok == len(results) else "FAIL"
        tr.write_line(f"criterion {n:2d}: {verdict}  ({ok}/{len(results)} parts)  {_titles[n]}")
        for nodeid, passed in results.items():
            if not passed:
                tr.write_line(f"    failed part: {nodeid.split('::', 1)[1]}")
