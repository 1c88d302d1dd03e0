import os
import sys
from collections import OrderedDict

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA = OrderedDict([
    (1, "replay of delta-sequence inequalities"),
    (2, "nesting-fit guarantee for all small schedules"),
    (3, "polynomial pattern end-to-end"),
    (4, "brute-force rasterizer agreement"),
    (5, "image-mode affine witness"),
    (6, "measure decay with high-precision cross-check"),
    (7, "derivative certification on random polynomials"),
    (8, "multivariate reduction against symbolic substitution"),
    (9, "mutation soundness of the verifier"),
])

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    ok = report.passed or (report.when != "call" and not report.failed)
    prev = _outcomes.get(n, {"ok": True, "cases": set(), "failed": []})
    prev["cases"].add(report.nodeid)
    if not ok:
        prev["ok"] = False
        prev["failed"].append(report.nodeid.split("::")[-1])
    _outcomes[n] = prev


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n not in _outcomes:
            terminalreporter.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        o = _outcomes[n]
        status = "PASS" if o["ok"] else "FAIL"
        line = f"criterion {n}: {status}  {title} ({len(o['cases'])} cases)"
        if o["failed"]:
            line += f"; failing: {', '.join(sorted(set(o['failed'])))}"
        terminalreporter.write_line(line)
