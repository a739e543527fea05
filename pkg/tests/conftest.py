"""Shared fixtures and the per-criterion acceptance report."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# criterion id -> (status, list of details); filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_collection_modifyitems(config, items):
    if os.environ.get("BOREL_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="slow reproduction run; set BOREL_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        if report.passed:
            status = "PASS"
        elif report.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
        if report.skipped and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2].removeprefix("Skipped: ")
        prev = ACCEPTANCE_RESULTS.get(crit)
        # a criterion fails if any of its parts fails
        rank = {"FAIL": 2, "SKIP": 1, "PASS": 0}
        parts = [detail] if detail else []
        if prev is None or rank[status] > rank[prev[0]]:
            ACCEPTANCE_RESULTS[crit] = (status, parts)
        elif rank[status] == rank[prev[0]] and detail and detail not in prev[1]:
            prev[1].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE_RESULTS, key=lambda c: int(c.split()[0])):
        status, details = ACCEPTANCE_RESULTS[crit]
        line = f"{status:4}  criterion {crit}"
        if details:
            line += f"  ({' | '.join(details)})"
        terminalreporter.write_line(line)
