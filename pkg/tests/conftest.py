import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from apasqueeze import params  # noqa: E402

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def ref20():
    return params.derive(params.reference_config(20.0))


@pytest.fixture(scope="session")
def ref0():
    return params.derive(params.reference_config(0.0))


@pytest.fixture(scope="session")
def diag20():
    return params.derive(params.reference_config(20.0), branch="diagonalizing")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion, title = marker.args
    entry = _ACCEPTANCE.setdefault(criterion, {"title": title, "tests": {}})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["tests"][item.nodeid] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[criterion]
        results = entry["tests"].values()
        ok = bool(results) and all(results)
        n_pass = sum(results)
        terminalreporter.write_line(
            f"C{criterion} {'PASS' if ok else 'FAIL'}  {entry['title']}  ({n_pass}/{len(entry['tests'])} checks)"
        )
