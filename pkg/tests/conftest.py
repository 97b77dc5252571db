import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(key, ok, detail)`` then assert.

    ``criterion.skip(key, reason)`` records a skipped criterion and skips the test.
    """

    def record(key: str, ok: bool, detail: str = ""):
        _CRITERIA[key] = ("PASS" if ok else "FAIL", detail)
        assert ok, f"{key}: {detail}"

    def skip(key: str, reason: str):
        _CRITERIA[key] = ("SKIP", reason)
        pytest.skip(reason)

    record.skip = skip
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.split()[0]), k)):
        status, detail = _CRITERIA[key]
        terminalreporter.write_line(f"{status}  {key}  {detail}")
