import pytest

_RESULTS = []


@pytest.fixture
def record():
    """Record one acceptance verdict; the summary lists them after the run."""

    def _record(criterion, passed, detail):
        _RESULTS.append((criterion, bool(passed), detail))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_RESULTS, key=lambda item: item[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
