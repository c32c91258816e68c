from collections import OrderedDict
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion number -> [text, outcomes of every test carrying that marker]
_CRITERIA: "OrderedDict[int, list]" = OrderedDict()


@pytest.fixture
def fixture_paths():
    return DATA / "synthetic_fixture.jsonl", DATA / "synthetic_fixture.catalog.csv"


def pytest_collection_modifyitems(config, items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            number, text = marker.args
            _CRITERIA.setdefault(number, [text, {}])[1][item.nodeid] = "not run"


def pytest_runtest_logreport(report):
    for entry in _CRITERIA.values():
        outcomes = entry[1]
        if report.nodeid not in outcomes:
            continue
        if report.failed:
            outcomes[report.nodeid] = "failed"
        elif report.skipped:
            outcomes[report.nodeid] = "skipped"
        elif report.when == "call" and outcomes[report.nodeid] == "not run":
            outcomes[report.nodeid] = "passed"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, outcomes = _CRITERIA[number]
        states = set(outcomes.values())
        if states == {"passed"}:
            verdict = "PASS"
        elif "failed" in states:
            verdict = "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {text}")
