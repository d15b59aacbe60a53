from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# The acceptance tests tag themselves with @pytest.mark.criterion("...");
# the summary prints one PASS/FAIL line per tag in this fixed order.
CRITERIA_ORDER = [
    "S1 exactness (CostMin 400.00 @ T0+400s, TimeMin 550.00 @ T0+150s)",
    "small-instance optimality vs enumeration oracle",
    "feasibility verdicts are sound (500 scenarios)",
    "budget never overrun beyond in-flight work (1000 scenarios)",
    "job state machine table and restart accounting",
    "protocol round-trips, parser fuzz, live end-to-end verbs",
    "scales to 5000 jobs / 200 nodes within latency bounds",
    "timezone localization identity and worked examples",
    "byte-identical event logs for identical scenario+seed",
]

_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): ties a test to one acceptance criterion"
    )
    config.addinivalue_line("markers", "slow: long-running acceptance load")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if rep.when == "setup" and rep.skipped:
        _results.setdefault(name, "SKIP")
    elif rep.when == "call":
        if rep.failed or _results.get(name) == "FAIL":
            _results[name] = "FAIL"
        elif _results.get(name) != "SKIP":
            _results[name] = "PASS"
    elif rep.failed:  # setup/teardown error
        _results[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    ordered = [n for n in CRITERIA_ORDER if n in _results]
    ordered += [n for n in _results if n not in CRITERIA_ORDER]
    for name in ordered:
        terminalreporter.write_line(f"[{_results[name]}] {name}")
