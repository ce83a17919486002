import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def acceptance_log(request):
    log = getattr(request.config, "_acceptance_lines", None)
    if log is None:
        log = request.config._acceptance_lines = {}
    return log


def pytest_terminal_summary(terminalreporter):
    lines = getattr(terminalreporter.config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
