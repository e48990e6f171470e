import os

import pytest
from hypothesis import settings

# fixed example streams keep the recorded run reproducible; set
# HYPOTHESIS_PROFILE=explore for fresh random examples
settings.register_profile("repro", derandomize=True)
settings.register_profile("explore", derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, limit): acceptance criterion with a runtime limit in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args[:2]
    limit = marker.kwargs.get("limit")
    if report.when == "setup" and report.passed:
        return
    _RESULTS[number] = (title, report.passed, report.duration, limit)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, duration, limit = _RESULTS[number]
        budget = f", limit {limit:g} s" if limit else ""
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({duration:.2f} s{budget})"
        )
