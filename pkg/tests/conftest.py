import pytest

ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; assertion failures still fail the test."""
    entry = {"name": request.node.name, "ok": False, "detail": ""}
    ACCEPTANCE.append(entry)

    def report(ok, detail):
        entry["ok"], entry["detail"] = bool(ok), detail
        assert ok, detail

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if e['ok'] else 'FAIL'}  {e['name']}: {e['detail']}")
