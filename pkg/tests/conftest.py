from collections import deque

import pytest

from pedwarn.core import Pose2, Vec2
from pedwarn.ego_state import initial_state

RATE = 36.0


class SimpleTrack:
    """Minimal stand-in for a track: only ``samples`` is needed by the fitter."""

    def __init__(self, samples):
        self.samples = deque(samples)


def line_samples(n, b0_long, b1_long, b0_lat, b1_lat, t0=0.0, rate=RATE):
    return [(t0 + k / rate, Vec2(b0_long + b1_long * k / rate, b0_lat + b1_lat * k / rate))
            for k in range(n)]


def ego_at(t, x=0.0, y=0.0, heading=0.0, speed=0.0):
    return initial_state(t, (x, y), heading, speed)


@pytest.fixture
def origin_pose():
    return Pose2(Vec2(0.0, 0.0), 0.0)


# acceptance summary lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
