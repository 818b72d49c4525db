import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pedwarn.conflict import (Conflict, Direction, RateLimiter, Severity,
                              compose_utterance, decide_warning, direction, direction_word,
                              find_interception, warning_gate)
from pedwarn.core import FrameSet, ObjectClass, Pose2, Vec2
from pedwarn.prediction import InvalidFitError, TrajectoryFit, fit_track
from pedwarn.route import Maneuver, RoutePath, project
from pedwarn.scenario import MPH

from conftest import SimpleTrack, line_samples

ROUTE = RoutePath(np.array([[0.0, 0.0], [300.0, 0.0]]))
V15 = 15 * MPH
PED = ObjectClass.PEDESTRIAN


def fit_of(x, y, vx=0.0, vy=0.0, t_ref=0.0, n=54):
    return TrajectoryFit(t_ref, y, vy, x, vx, n, n >= 12, n >= 30, math.hypot(vx, vy) > 3.5)


def fix_at(x):
    return project(Pose2(Vec2(x, 0.0), 0.0), ROUTE)


def test_worked_example_15mph():
    c = find_interception(fit_of(20, -6, vy=1.5), ROUTE, fix_at(0.0), V15, 0.0)
    # closed form: the walker enters |y| <= 1.5 after (6 - 1.5) / 1.5 s
    assert c.t_ped_enter == pytest.approx((6 - 1.5) / 1.5, abs=1e-9)
    assert c.t_ped_exit == pytest.approx((6 + 1.5) / 1.5, abs=1e-9)
    assert c.s_intercept == pytest.approx(20.0, abs=1e-9)
    assert c.t_veh == pytest.approx(20.0 / 6.7056, abs=1e-9)
    assert c.point == pytest.approx((20.0, 0.0), abs=1e-9)
    assert warning_gate(c) is Severity.EARLY


def test_on_centerline():
    c = find_interception(fit_of(15, 0), ROUTE, fix_at(0.0), V15, 0.0)
    assert c.t_ped_enter == 0.0
    assert c.point == pytest.approx((15.0, 0.0))
    assert c.s_intercept == pytest.approx(15.0)


def test_parallel_walker_never_conflicts():
    assert find_interception(fit_of(10, 5, vx=1.4), ROUTE, fix_at(0.0), V15, 0.0) is None


def test_behind_ego_ignored():
    assert find_interception(fit_of(5, 0), ROUTE, fix_at(10.0), V15, 0.0) is None


def test_slow_ego_not_approaching():
    assert find_interception(fit_of(15, 0), ROUTE, fix_at(0.0), 0.3, 0.0) is None
    with pytest.raises(ValueError):
        find_interception(fit_of(15, 0), ROUTE, fix_at(0.0), -1.0, 0.0)


def test_invalid_fit_raises():
    with pytest.raises(InvalidFitError):
        find_interception(fit_of(15, 0, n=8), ROUTE, fix_at(0.0), V15, 0.0)
    with pytest.raises(InvalidFitError):
        direction(fit_of(15, 0, n=8), 0.0)


def test_rotated_analysis_frame():
    """Same geometry with the whole world turned by 1 rad gives the same conflict."""
    h = 1.0
    c, s = math.cos(h), math.sin(h)
    route = RoutePath(np.array([[0.0, 0.0], [300 * c, 300 * s]]))
    fix = project(Pose2(Vec2(0, 0), h), route)
    got = find_interception(fit_of(20, -6, vy=1.5), route, fix, V15, 0.0, FrameSet(h))
    assert got.s_intercept == pytest.approx(20.0, abs=1e-9)


@pytest.mark.parametrize("t_veh,s,enter,exit_,expected", [
    (2.98, 20.0, 3.0, 5.0, Severity.EARLY),
    (4.5, 30.0, 4.0, 5.0, None),
    (3.0, 70.0, 2.0, 4.0, None),
    (0.9, 6.0, 0.0, 2.0, Severity.EMERGENCY),
    (2.0, 20.0, 4.0, 6.0, None),   # walker arrives after the car has long gone
])
def test_warning_rule_examples(t_veh, s, enter, exit_, expected):
    assert warning_gate(Conflict(1, Vec2(s, 0), s, t_veh, enter, exit_)) is expected


def test_conflict_validation():
    with pytest.raises(ValueError):
        Conflict(1, Vec2(0, 0), -1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Conflict(1, Vec2(0, 0), 1.0, 1.0, 2.0, 1.0)


def test_direction_examples():
    # crossing left to right, straight ahead one second from now
    assert direction(fit_of(10, 1.4, vy=-1.4), 0.0, 1.0) is Direction.AHEAD
    assert direction(fit_of(10, 5), 0.0) is Direction.LEFT
    assert direction(fit_of(10, -4), 0.0) is Direction.RIGHT


def test_direction_uses_current_vehicle_frame():
    # world point at y=+5 is on the right of an ego facing -x
    ego = Pose2(Vec2(20, 0), math.pi)
    assert direction(fit_of(10, 5), 0.0, 1.0, ego) is Direction.RIGHT


def test_direction_word_band_edges():
    assert direction_word(1.75) is Direction.AHEAD
    assert direction_word(-1.75) is Direction.AHEAD
    assert direction_word(1.7500001) is Direction.LEFT
    assert direction_word(-1.7500001) is Direction.RIGHT


def test_utterances():
    assert compose_utterance(PED, Direction.LEFT) == "Watch out for the pedestrian on the left"
    assert (compose_utterance(ObjectClass.BICYCLE, Direction.RIGHT, Maneuver(50, "turn right"))
            == "turn right and watch out for bicycle on your right")
    assert compose_utterance(PED, Direction.AHEAD) == "Watch out for the pedestrian ahead"
    assert (compose_utterance(PED, Direction.AHEAD, Maneuver(50, "turn left"))
            == "turn left and watch out for pedestrian ahead")


def test_rate_limiter():
    lim = RateLimiter(10.0)
    assert lim.allow(1, 0.0, Severity.EARLY)
    assert not lim.allow(1, 1.0, Severity.EARLY)
    assert lim.allow(2, 1.0, Severity.EARLY)
    assert lim.allow(1, 2.0, Severity.EMERGENCY)
    assert not lim.allow(1, 2.5, Severity.EMERGENCY)
    assert not lim.allow(1, 3.0, Severity.EARLY)
    assert lim.allow(1, 12.0, Severity.EARLY)


def test_decide_warning_builds_event():
    fit = fit_of(20, -6, vy=1.5)
    c = find_interception(fit, ROUTE, fix_at(0.0), V15, 0.0, track_id=4)
    w = decide_warning(c, 0.0, fit, PED, Pose2(Vec2(0, 0), 0.0))
    assert w.severity is Severity.EARLY and w.direction is Direction.RIGHT
    assert w.utterance == "Watch out for the pedestrian on the right"
    assert w.to_dict() == {"t": 0.0, "id": 4, "class": "pedestrian", "severity": "early",
                           "direction": "right", "utterance": w.utterance,
                           "t_veh": c.t_veh, "s": c.s_intercept}
    far = Conflict(4, Vec2(70, 0), 70.0, 3.0, 2.0, 4.0)
    assert decide_warning(far, 0.0, fit, PED) is None


def test_monotone_escalation():
    """Closing at constant speed: none -> early -> emergency, never back while the conflict lasts."""
    fit = fit_of(40, -8.5, vy=1.4)
    order = {None: 0, Severity.EARLY: 1, Severity.EMERGENCY: 2}
    seen, warned = [], False
    for k in range(0, 7 * 36):
        t = k / 36
        c = find_interception(fit, ROUTE, fix_at(V15 * t), V15, t)
        if c is None:
            if warned:
                break
            continue
        sev = warning_gate(c)
        if warned:
            assert sev is not None
        warned = warned or sev is not None
        seen.append(order[sev])
    assert warned and seen[-1] == 2
    assert all(b >= a for a, b in zip(seen, seen[1:]))


@pytest.mark.parametrize("n", range(2, 41))
def test_no_warning_from_short_tracks(n):
    track = SimpleTrack(line_samples(n, 20.0, 0.0, -2.5, 1.4))
    fit = fit_track(track, 10.0)
    now = track.samples[-1][0]
    warned = False
    if fit.usable:
        c = find_interception(fit, ROUTE, fix_at(0.0), V15, now)
        warned = c is not None and decide_warning(c, now, fit, PED) is not None
    assert warned == (n >= 12)


coords = st.floats(-30, 30, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.floats(1, 60), coords, st.floats(-3, 3), st.floats(-3, 3), coords, coords,
       st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_direction_mirror_equivariance(x, y, vx, vy, ex, ey, eh, h0):
    fit = fit_of(x, y, vx, vy)
    mirror = fit_of(x, -y, vx, -vy)
    d = direction(fit, 0.0, 1.0, Pose2(Vec2(ex, ey), eh), FrameSet(h0))
    m = direction(mirror, 0.0, 1.0, Pose2(Vec2(ex, -ey), -eh), FrameSet(-h0))
    swap = {Direction.LEFT: Direction.RIGHT, Direction.RIGHT: Direction.LEFT,
            Direction.AHEAD: Direction.AHEAD}
    assert m is swap[d]
