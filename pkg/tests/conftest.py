from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parent.parent / "data"

# filled by the acceptance suite, printed at the end of the run
CRITERIA: dict[int, str] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
