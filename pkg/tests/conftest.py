from __future__ import annotations

import os

import pytest

SLOW = os.environ.get("QPPTURBO_SLOW") == "1"

# criterion id -> list of (test name, outcome, detail)
_ACCEPTANCE: dict[str, list[tuple[str, str, str]]] = {}


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="long-running job; set QPPTURBO_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.setdefault(marker.args[0], []).append((item.name, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for crit in sorted(_ACCEPTANCE):
        runs = _ACCEPTANCE[crit]
        outcomes = [o for _, o, _ in runs]
        if "failed" in outcomes:
            status = "FAIL"
        elif "passed" in outcomes:
            status = "PASS"
        else:
            status = "SKIP"
        skipped = outcomes.count("skipped")
        note = f" ({skipped} long-running check(s) skipped)" if skipped and status != "SKIP" else ""
        details = " | ".join(d for _, o, d in runs if d)
        terminalreporter.write_line(f"{crit} {status}{note}: {details}" if details else f"{crit} {status}{note}")


@pytest.fixture
def cache_dir(tmp_path):
    return tmp_path / "cache"
