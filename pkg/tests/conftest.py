import re
from collections import OrderedDict

import pytest

from recsynth.config import load_config
from recsynth.pipeline import run_pipeline

_CRITERION = re.compile(r"test_c(\d+)_")
_results: "OrderedDict[int, dict]" = OrderedDict()


@pytest.fixture(scope="session")
def default_spec():
    return load_config()


@pytest.fixture(scope="session")
def small_spec(default_spec):
    return default_spec.replace(n_users=2000)


@pytest.fixture(scope="session")
def small_bundle(small_spec):
    return run_pipeline(small_spec, workers=1)


@pytest.fixture(scope="session")
def full_bundle(default_spec):
    """The shipped case study at its full 100k users."""
    return run_pipeline(default_spec, workers=1)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid.split("::")[-1])
    if not m or "test_acceptance" not in report.nodeid:
        return
    entry = _results.setdefault(int(m.group(1)), {"ok": True, "ran": False, "tests": []})
    if report.when == "call" or report.outcome != "passed":
        entry["ran"] = True
        if report.outcome != "passed":
            entry["ok"] = False
            entry["tests"].append(report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        extra = f"  ({', '.join(entry['tests'])})" if entry["tests"] else ""
        terminalreporter.write_line(f"criterion {n:2d}: {status}{extra}")
