import sys
from pathlib import Path

import pytest
from hypothesis import settings

from toponav.harness.canvas import Canvas

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


def open_world(width=10.0, height=10.0, resolution=0.05):
    return Canvas(width, height, resolution).grid()


@pytest.fixture
def empty_world():
    return open_world()


@pytest.fixture
def wall_world():
    """10x10 m room with a solid wall filling x in [5, 6]."""
    return Canvas(10.0, 10.0).box(5.0, 0.0, 6.0, 10.0).grid()


@pytest.fixture
def two_rooms():
    """Rooms split at x=5 with a 1 m door at y in [8, 9]."""
    c = Canvas(10.0, 10.0)
    c.wall((5.0, 0.0), (5.0, 8.0), 0.2)
    c.wall((5.0, 9.0), (5.0, 10.0), 0.2)
    return c.grid()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "REPORT", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.REPORT):
        terminalreporter.write_line(mod.REPORT[n])
