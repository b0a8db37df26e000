import os
from pathlib import Path

import pytest

from mcsvm.synthetic import synthetic_cleveland_text

REPO = Path(__file__).resolve().parents[1]


def cleveland_path() -> Path | None:
    """Location of the real UCI file, if one has been provided."""
    env = os.environ.get("MCSVM_CLEVELAND")
    candidates = [Path(env)] if env else []
    candidates.append(REPO / "data" / "processed.cleveland.data")
    for p in candidates:
        if p.is_file():
            return p
    return None


@pytest.fixture
def synthetic_text():
    return synthetic_cleveland_text(seed=0)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    results = item.config._criteria.setdefault(number, [text, "PASS"])
    if rep.failed:
        results[1] = "FAIL"
    elif rep.skipped and results[1] == "PASS":
        results[1] = "SKIP"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not config._criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(config._criteria):
        text, status = config._criteria[number]
        terminalreporter.write_line(f"{status:4s}  criterion {number:2d}: {text}")
