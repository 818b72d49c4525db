"""Route/trajectory conflicts and the warnings they trigger.

A predicted road-user path is sampled over a short horizon and compared
with a corridor around the ego route. If the ego would reach the crossing
point in under ``t_warn`` seconds and the crossing is no further than
``s_max`` metres ahead, a warning is raised, with a direction word for
where the road user will be once the prompt has been spoken.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .core import FrameSet, ObjectClass, Pose2, Vec2, from_analysis, world_to_vehicle
from .prediction import InvalidFitError, TrajectoryFit, predict_path, predict_position
from .route import Maneuver, RouteFix, RoutePath, project_points


class Severity(str, enum.Enum):
    EARLY = "early"
    EMERGENCY = "emergency"


class Direction(str, enum.Enum):
    LEFT = "left"
    AHEAD = "ahead"
    RIGHT = "right"


@dataclass
class ConflictConfig:
    horizon: float = 8.0              # s of trajectory extrapolation
    step: float = 0.1                 # s between predicted samples
    corridor_half_width: float = 1.5  # m
    ahead_half_width: float = 1.75    # m, |y| band reported as "ahead"
    t_warn: float = 4.0               # s, vehicle time to interception
    s_max: float = 60.0               # m, arc length ahead of the ego
    t_emergency: float = 1.0          # s
    overlap_tau: float = 1.5          # s of slack around the vehicle arrival
    prompt_duration: float = 1.0      # s
    speed_floor: float = 0.5          # m/s
    rate_limit: float = 10.0          # s between warnings of one track
    maneuver_window: float = 2.0      # s; maneuver prompts due this soon get merged


@dataclass(frozen=True)
class Conflict:
    track_id: int
    point: Vec2           # interception point, world frame
    s_intercept: float    # arc length ahead of the ego projection
    t_veh: float          # s until the ego reaches the point
    t_ped_enter: float    # s until the road user enters the corridor
    t_ped_exit: float

    def __post_init__(self):
        if self.s_intercept < 0:
            raise ValueError(f"s_intercept must be >= 0, got {self.s_intercept}")
        if self.t_ped_enter > self.t_ped_exit:
            raise ValueError("corridor entry after exit")


@dataclass(frozen=True)
class WarningEvent:
    t_issued: float
    track_id: int
    cls: ObjectClass
    severity: Severity
    direction: Direction
    utterance: str
    conflict: Conflict

    def to_dict(self) -> dict:
        return {"t": self.t_issued, "id": self.track_id, "class": self.cls.value,
                "severity": self.severity.value, "direction": self.direction.value,
                "utterance": self.utterance, "t_veh": self.conflict.t_veh,
                "s": self.conflict.s_intercept}


def find_interception(fit: TrajectoryFit, route: RoutePath, ego_fix: RouteFix, ego_speed: float,
                      now: float, frames: FrameSet = FrameSet(), track_id: int = -1,
                      config: ConflictConfig = ConflictConfig()) -> Optional[Conflict]:
    """First corridor crossing of the predicted path ahead of the ego, if any."""
    if not fit.lat_valid:
        raise InvalidFitError(f"fit has {fit.n_samples} samples; lateral model not valid")
    if ego_speed < 0:
        raise ValueError("ego speed must be >= 0")
    if ego_speed < config.speed_floor:
        return None
    n = int(round(config.horizon / config.step)) + 1
    rel_t = np.arange(n) * config.step
    path = predict_path(fit, now + rel_t)
    h = frames.initial_heading
    c, s = math.cos(h), math.sin(h)
    world = np.column_stack([c * path[:, 0] - s * path[:, 1], s * path[:, 0] + c * path[:, 1]])
    arc, _, dist, _ = project_points(world, route)
    inside = (dist <= config.corridor_half_width) & (arc > ego_fix.s)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        return None
    first = hits[0]
    last = first
    while last + 1 < n and inside[last + 1]:
        last += 1
    mid = (first + last) // 2
    s_mid = float(arc[mid])
    ds = s_mid - ego_fix.s
    return Conflict(track_id, route.point_at(s_mid), ds, ds / ego_speed,
                    float(rel_t[first]), float(rel_t[last]))


def warning_gate(conflict: Conflict, config: ConflictConfig = ConflictConfig()) -> Optional[Severity]:
    """Severity the conflict warrants, or None when no warning is due."""
    if not (conflict.t_veh < config.t_warn and conflict.s_intercept <= config.s_max):
        return None
    lo, hi = conflict.t_veh - config.overlap_tau, conflict.t_veh + config.overlap_tau
    if conflict.t_ped_exit < lo or conflict.t_ped_enter > hi:
        return None
    return Severity.EMERGENCY if conflict.t_veh < config.t_emergency else Severity.EARLY


def direction(fit: TrajectoryFit, now: float, prompt_duration: float = 1.0,
              ego_pose: Optional[Pose2] = None, frames: FrameSet = FrameSet(),
              ahead_half_width: float = 1.75) -> Direction:
    """Side the road user will be on after the prompt has been spoken.

    The predicted position at ``now + prompt_duration`` is expressed in the
    *current* vehicle frame (``ego_pose``; identity when omitted).
    """
    p = from_analysis(predict_position(fit, now + prompt_duration), frames)
    if ego_pose is not None:
        p = world_to_vehicle(p, ego_pose)
    return direction_word(p.y, ahead_half_width)


def direction_word(lateral: float, ahead_half_width: float = 1.75) -> Direction:
    if abs(lateral) <= ahead_half_width:
        return Direction.AHEAD
    return Direction.LEFT if lateral > 0 else Direction.RIGHT


def compose_utterance(cls: ObjectClass, dir_: Direction,
                      pending_maneuver: Optional[Maneuver] = None) -> str:
    name = ObjectClass(cls).value
    if pending_maneuver is None:
        if dir_ is Direction.AHEAD:
            return f"Watch out for the {name} ahead"
        return f"Watch out for the {name} on the {dir_.value}"
    where = "ahead" if dir_ is Direction.AHEAD else f"on your {dir_.value}"
    return f"{pending_maneuver.text} and watch out for {name} {where}"


class RateLimiter:
    """At most one warning per track every ``period`` seconds, unless it escalates."""

    def __init__(self, period: float = 10.0):
        self.period = period
        self._last: Dict[int, Tuple[float, Severity]] = {}

    def allow(self, track_id: int, now: float, severity: Severity) -> bool:
        prev = self._last.get(track_id)
        if (prev is None or now - prev[0] >= self.period
                or (prev[1] is Severity.EARLY and severity is Severity.EMERGENCY)):
            self._last[track_id] = (now, severity)
            return True
        return False


def decide_warning(conflict: Conflict, now: float, fit: TrajectoryFit, cls: ObjectClass,
                   ego_pose: Optional[Pose2] = None, frames: FrameSet = FrameSet(),
                   prompt_duration: Optional[float] = None,
                   pending: Optional[Maneuver] = None,
                   limiter: Optional[RateLimiter] = None,
                   config: ConflictConfig = ConflictConfig()) -> Optional[WarningEvent]:
    """Turn a conflict into a warning if the timing rule and rate limit allow it."""
    severity = warning_gate(conflict, config)
    if severity is None:
        return None
    if limiter is not None and not limiter.allow(conflict.track_id, now, severity):
        return None
    pd = config.prompt_duration if prompt_duration is None else prompt_duration
    dir_ = direction(fit, now, pd, ego_pose, frames, config.ahead_half_width)
    return WarningEvent(now, conflict.track_id, ObjectClass(cls), severity, dir_,
                   compose_utterance(cls, dir_, pending), conflict)
