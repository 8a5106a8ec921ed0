from __future__ import annotations

import json
from pathlib import Path

import pytest

from elicitkit.distributions import distribution_from_dict
from elicitkit.suite import standard_suite

FIXTURES = Path(__file__).parent / "fixtures"
SUITE = standard_suite()

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        verdict = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {e['title']} ({e['tests']} tests)")


@pytest.fixture
def u4():
    return distribution_from_dict({"outcomes": [1, 2, 3, 4], "probs": [0.25] * 4})


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text())


def pairs_from(obj):
    return [(distribution_from_dict(a), distribution_from_dict(b)) for a, b in obj["pairs"]]
