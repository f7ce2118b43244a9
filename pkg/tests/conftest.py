import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Collects a one-line summary for an acceptance criterion."""
    entry = {"id": request.node.name, "detail": ""}
    _ACCEPTANCE.append(entry)

    def record(detail):
        entry["detail"] = detail

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        for entry in _ACCEPTANCE:
            if entry["id"] == item.name:
                entry["outcome"] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE:
        status = {"passed": "PASS", "failed": "FAIL"}.get(entry.get("outcome"), "SKIP")
        terminalreporter.write_line(f"[{status}] {entry['id']}: {entry['detail']}")
