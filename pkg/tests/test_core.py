import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pedwarn.core import (Detection, FrameSet, ObjectClass, Pose2, StaleEgoError, Vec2,
                          from_analysis, normalize_angle, to_analysis, to_world, world_to_vehicle)

finite = st.floats(-200, 200, allow_nan=False)
angles = st.floats(-10, 10, allow_nan=False)


def det(x, y, t=0.0):
    return Detection(t, 1, ObjectClass.PEDESTRIAN, Vec2(x, y))


def test_identity_pose():
    assert to_world(det(10, 0), Pose2(Vec2(0, 0), 0.0)) == pytest.approx((10, 0))


def test_quarter_turn():
    p = to_world(det(10, 0), Pose2(Vec2(0, 0), math.pi / 2))
    assert p.x == pytest.approx(0.0, abs=1e-12)
    assert p.y == pytest.approx(10.0)


def test_rotation_matrix_oracle():
    th = 0.3
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    expected = R @ np.array([20.0, 3.0]) + np.array([5.0, 1.0])
    got = to_world(det(20, 3), Pose2(Vec2(5, 1), th))
    assert np.allclose(got, expected, atol=1e-12)


def test_analysis_identity_and_reflection():
    assert to_analysis(Vec2(7, 2), FrameSet(0.0)) == (7, 2)
    p = to_analysis(Vec2(7, 2), FrameSet(math.pi))
    assert p.x == pytest.approx(-7) and p.y == pytest.approx(-2)


@given(st.tuples(finite, finite), angles)
def test_analysis_round_trip(p, h):
    q = from_analysis(to_analysis(Vec2(*p), FrameSet(h)), FrameSet(h))
    assert abs(q.x - p[0]) < 1e-12 and abs(q.y - p[1]) < 1e-12


@given(st.lists(st.tuples(st.floats(0.5, 80), st.floats(-40, 40)), min_size=2, max_size=6),
       st.tuples(finite, finite), angles, angles)
def test_world_then_analysis_is_isometry(pts, origin, heading, h0):
    pose = Pose2(Vec2(*origin), heading)
    frames = FrameSet(h0)
    out = np.array([to_analysis(to_world(det(x, y), pose), frames) for x, y in pts])
    raw = np.array(pts)
    d_in = np.linalg.norm(raw[:, None] - raw[None], axis=-1)
    d_out = np.linalg.norm(out[:, None] - out[None], axis=-1)
    assert np.max(np.abs(d_in - d_out)) < 1e-9


@given(st.tuples(st.floats(0.5, 80), finite))
def test_stationary_origin_frames_coincide(p):
    pose = Pose2(Vec2(0, 0), 0.0)
    w = to_world(det(*p), pose)
    assert w == p
    assert to_analysis(w, FrameSet()) == p
    assert world_to_vehicle(w, pose) == p


def test_world_to_vehicle_inverts_to_world():
    pose = Pose2(Vec2(3, -2), 2.1)
    w = to_world(det(12, -4), pose)
    v = world_to_vehicle(w, pose)
    assert v.x == pytest.approx(12) and v.y == pytest.approx(-4)


def test_stale_ego_rejected():
    d = det(10, 0, t=1.0)
    pose = Pose2(Vec2(0, 0), 0.0)
    to_world(d, pose, pose_t=1.0 - 0.02)
    with pytest.raises(StaleEgoError):
        to_world(d, pose, pose_t=0.9)


@given(angles)
def test_normalize_angle_range(a):
    n = normalize_angle(a)
    assert -math.pi < n <= math.pi
    assert math.isclose(math.cos(n), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(n), math.sin(a), abs_tol=1e-9)


def test_pose_heading_normalised():
    assert Pose2(Vec2(0, 0), 3 * math.pi).heading == pytest.approx(math.pi)


@pytest.mark.parametrize("x,y", [(0.0, 1.0), (-3.0, 0.0), (float("nan"), 0.0), (5.0, float("inf"))])
def test_detection_validation(x, y):
    with pytest.raises(ValueError):
        det(x, y)


def test_detection_dict_round_trip():
    d = Detection(0.5, 203, "bicycle", (12.5, -1.25))
    assert d.to_dict() == {"t": 0.5, "id": 203, "class": "bicycle", "x": 12.5, "y": -1.25}
    assert Detection.from_dict(d.to_dict()) == d
    assert d.bearing == pytest.approx(math.atan2(-1.25, 12.5))
