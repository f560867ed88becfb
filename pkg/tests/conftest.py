"""Acceptance reporting: one PASS/FAIL line per ``@pytest.mark.criterion(n)``.

Tests attach a one-line summary of their measured quantities with
``record_property("detail", ...)``; it is echoed next to the verdict.
"""

import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    entry = _results.setdefault(n, {"passed": True, "details": [], "title": mark.kwargs.get("title", "")})
    if report.failed or (report.when == "setup" and report.skipped):
        entry["passed"] = False
    if report.when == "call":
        entry["details"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        r = _results[n]
        verdict = "PASS" if r["passed"] else "FAIL"
        detail = "; ".join(r["details"])
        terminalreporter.write_line(f"criterion {n:>2} {verdict}  {r['title']}" + (f"  [{detail}]" if detail else ""))
