from pathlib import Path

import pytest

from cfaudit.examples import build_linear_scm, build_review_scm

DATA = Path(__file__).resolve().parents[1] / "src" / "cfaudit" / "data"

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        _acceptance[number] = (title, report.passed, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, passed, duration = _acceptance[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  ({duration:.2f}s)")


@pytest.fixture
def linear():
    return build_linear_scm()


@pytest.fixture
def review():
    return build_review_scm()


@pytest.fixture
def data_dir():
    return DATA
