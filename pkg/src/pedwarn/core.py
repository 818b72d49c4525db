"""Reference frames, geometry primitives and shared domain types.

Three planar frames are used throughout the package:

* world    -- local ENU plane anchored at the scenario start (metres)
* vehicle  -- x forward, y left, origin at the ego reference point
* analysis -- the world frame rotated so that the ego's *initial* heading
              points along +x; longitudinal motion is x, lateral is y
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

CAMERA_PERIOD = 1.0 / 36.0


class StaleEgoError(ValueError):
    """Raised when an ego pose is too old (or too new) for a detection."""


class Vec2(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


class ObjectClass(str, enum.Enum):
    PEDESTRIAN = "pedestrian"
    BICYCLE = "bicycle"
    VEHICLE = "vehicle"


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def rotate(v: Vec2, angle: float) -> Vec2:
    c, s = math.cos(angle), math.sin(angle)
    return Vec2(c * v.x - s * v.y, s * v.x + c * v.y)


@dataclass(frozen=True)
class Pose2:
    position: Vec2
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "position", Vec2(float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))


@dataclass(frozen=True)
class Detection:
    """One camera observation, expressed in the vehicle frame."""

    t: float
    track_id: int
    cls: ObjectClass
    pos: Vec2

    def __post_init__(self):
        pos = Vec2(float(self.pos[0]), float(self.pos[1]))
        if not (math.isfinite(self.t) and math.isfinite(pos.x) and math.isfinite(pos.y)):
            raise ValueError(f"non-finite detection: t={self.t}, pos={pos}")
        if pos.x <= 0.0:
            raise ValueError(f"detection behind the camera plane: x={pos.x}")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "cls", ObjectClass(self.cls))

    @property
    def bearing(self) -> float:
        return math.atan2(self.pos.y, self.pos.x)

    def to_dict(self) -> dict:
        return {"t": self.t, "id": self.track_id, "class": self.cls.value,
                "x": self.pos.x, "y": self.pos.y}

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(float(d["t"]), int(d["id"]), ObjectClass(d["class"]),
                   Vec2(float(d["x"]), float(d["y"])))


@dataclass(frozen=True)
class FrameSet:
    """World -> analysis rotation, fixed for a whole run.

    ``initial_heading`` is the ego heading at scenario start; the analysis
    frame is the world frame rotated by minus this angle.
    """

    initial_heading: float = 0.0


def to_world(det: Detection, pose: Pose2, pose_t: Optional[float] = None,
             tolerance: float = CAMERA_PERIOD) -> Vec2:
    """Place a vehicle-frame detection in the world using the ego pose.

    If ``pose_t`` is given it must lie within ``tolerance`` seconds of the
    detection time.
    """
    if pose_t is not None and abs(det.t - pose_t) > tolerance:
        raise StaleEgoError(
            f"ego pose at t={pose_t:.4f} is {abs(det.t - pose_t):.4f} s from detection t={det.t:.4f}")
    r = rotate(det.pos, pose.heading)
    return Vec2(pose.position.x + r.x, pose.position.y + r.y)


def to_analysis(p_world: Vec2, frames: FrameSet) -> Vec2:
    return rotate(p_world, -frames.initial_heading)


def from_analysis(p_analysis: Vec2, frames: FrameSet) -> Vec2:
    return rotate(p_analysis, frames.initial_heading)


def world_to_vehicle(p_world: Vec2, pose: Pose2) -> Vec2:
    d = Vec2(p_world.x - pose.position.x, p_world.y - pose.position.y)
    return rotate(d, -pose.heading)
