import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from gfcstab.model import default_parameters  # noqa: E402

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def defaults():
    return default_parameters()


@pytest.fixture(scope="session")
def cp(defaults):
    return defaults[0]


@pytest.fixture(scope="session")
def mp(defaults):
    return defaults[1]


@pytest.fixture(scope="session")
def net(defaults):
    return defaults[2]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
