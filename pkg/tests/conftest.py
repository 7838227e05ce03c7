"""Shared fixtures and the acceptance report printed after the run."""

from __future__ import annotations

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    n = marker.kwargs["criterion"]
    entry = _RESULTS.setdefault(n, {"title": marker.kwargs.get("title", item.name),
                                    "passed": True, "details": []})
    if call.excinfo is not None:
        entry["passed"] = False
    entry["details"].extend(getattr(item, "_acceptance_details", []))


@pytest.fixture
def report(request):
    """Append a one-line measurement to the acceptance summary."""
    details: list[str] = []
    request.node._acceptance_details = details
    return details.append


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        r = _RESULTS[n]
        status = "PASS" if r["passed"] else "FAIL"
        line = f"criterion {n:2d} {status}: {r['title']}"
        if r["details"]:
            line += " | " + "; ".join(r["details"])
        tr.write_line(line)
