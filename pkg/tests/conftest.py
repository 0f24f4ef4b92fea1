import pytest

_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the summary table."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        _CRITERIA[number] = (title, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
