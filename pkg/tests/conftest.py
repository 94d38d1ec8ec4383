import os

import pytest

from flagcoh.cech import Cache

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = CRITERIA.get(n, (text, "PASS"))[1]
        status = "PASS" if rep.outcome == "passed" and prev == "PASS" else "FAIL"
        if rep.outcome == "skipped":
            status = "SKIP"
        CRITERIA[n] = (text, status)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        text, status = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {text}")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    d = os.environ.get("FLAGCOH_TEST_CACHE")
    return d if d else str(tmp_path_factory.mktemp("flagcoh-cache"))


@pytest.fixture(scope="session")
def cache(cache_dir):
    return Cache(cache_dir)
