import pytest

from sicmeter import sampling

_acceptance = {}


@pytest.fixture
def gen():
    return sampling.rng(12345)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            item.user_properties.append(("acceptance", mark.args))


def pytest_runtest_logreport(report):
    args = dict(report.user_properties).get("acceptance")
    if args is None:
        return
    # a failure in any phase marks the criterion as failed
    if report.when == "call" or report.failed:
        _acceptance.setdefault(args, report.passed)
        if report.failed:
            _acceptance[args] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), passed in sorted(_acceptance.items()):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] AC{number:02d} {title}")
