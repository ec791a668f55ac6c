import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None and (report.when == "call" or report.failed):
        number, title = mark.args
        results = item.config.stash[_RESULTS]
        results[number] = (title, results.get(number, (title, True))[1] and report.passed)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok = results[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")
