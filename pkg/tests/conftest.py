import pytest

CRITERIA = {
    1: "kernel suite",
    2: "convolution oracle equivalence",
    3: "edge artifacts",
    4: "gradient check",
    5: "LIF consistency",
    6: "end-to-end ordering",
    7: "determinism",
    8: "format round-trips",
}
_verdicts: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record a criterion's outcome for the summary, then assert it."""

    def record(number: int, passed: bool, detail: str) -> None:
        _verdicts[number] = (bool(passed), detail)
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        if number in _verdicts:
            passed, detail = _verdicts[number]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "FAIL", "not run or errored before a verdict"
        terminalreporter.write_line(f"{status}  {number}. {title}: {detail}")
