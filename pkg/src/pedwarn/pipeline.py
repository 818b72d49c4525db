"""Log replay (ego filter -> tracking -> prediction -> conflict) and scoring."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig
from .conflict import (Conflict, RateLimiter, Severity, WarningEvent, decide_warning,
                       direction_word, find_interception, warning_gate)
from .core import Detection, FrameSet, Pose2, Vec2, world_to_vehicle
from .ego_state import EgoFilter, EgoRecord, bootstrap_state, initial_state
from .logs import check_time_order
from .prediction import FitError, TrajectoryFit, fit_track
from .route import RouteManager, RoutePath, pending_maneuver, project, project_points
from .scenario import ID_STRIDE
from .tracking import TrackStatus, TrackStore


class MismatchedLogsError(ValueError):
    pass


@dataclass
class PipelineResult:
    warnings: List[WarningEvent]
    tracks: List[dict]
    reroutes: int = 0

    def warning_records(self) -> List[dict]:
        return [w.to_dict() for w in self.warnings]


def _frame_times(det_times: Sequence[float], t0: float, t1: float, rate: float) -> List[float]:
    grid = list(t0 + np.arange(int(math.floor((t1 - t0) * rate + 1e-9)) + 1) / rate) if t1 >= t0 else []
    out, i = [], 0
    for g in grid:
        while i < len(det_times) and det_times[i] <= g + 1e-6:
            out.append(det_times[i])
            i += 1
        if not out or abs(out[-1] - g) > 1e-6:
            out.append(float(g))
    out.extend(det_times[i:])
    return out


def run_pipeline(config: RunConfig, detections: Sequence[Detection], ego_log: Sequence[EgoRecord],
                 route: Optional[RoutePath] = None, provider=None) -> PipelineResult:
    """Replay detection and ego logs at camera cadence and collect warnings.

    ``route`` is the initial most-probable path; with a ``provider`` it is
    re-requested whenever the ego deviates from it. Without an ego log the
    ego is taken to sit at the origin facing ``config.initial_heading``.
    """
    check_time_order(detections, "detection")
    check_time_order(ego_log, "ego")
    if not detections:
        return PipelineResult([], [])

    frames = FrameSet(config.initial_heading)
    filt = EgoFilter(bootstrap_state(ego_log, config.initial_heading), config.ego) if ego_log else None
    manager = RouteManager(provider, config.route.destination, config.route, route)
    store = TrackStore(config.tracking)
    limiter = RateLimiter(config.conflict.rate_limit)

    by_time: Dict[float, List[Detection]] = defaultdict(list)
    for d in detections:
        by_time[d.t].append(d)
    det_times = sorted(by_time)
    t0 = det_times[0]
    t1 = det_times[-1] + config.tracking.ghost_horizon
    if ego_log:
        t0 = min(t0, ego_log[0].t)
        t1 = min(t1, max(ego_log[-1].t, det_times[-1]))

    fits: Dict[int, TrajectoryFit] = {}
    warnings: List[WarningEvent] = []
    tracks_log: List[dict] = []
    k = 0
    for tf in _frame_times(det_times, t0, t1, config.camera.rate):
        if filt is not None:
            while k < len(ego_log) and ego_log[k].t <= tf + 1e-9:
                filt.feed(ego_log[k])
                k += 1
            ego = filt.state
        else:
            ego = initial_state(tf, heading=config.initial_heading)
        fix = manager.update(ego)
        store.tick(tf, fits)

        for det in by_time.get(tf, ()):
            track = store.ingest(det, ego, frames)
            p = track.samples[-1][1]
            tracks_log.append({"t": tf, "id": track.id, "x": p.x, "y": p.y})
            if len(track.samples) >= 2:
                try:
                    fits[track.id] = fit_track(track, tf, config.prediction)
                except FitError:
                    fits.pop(track.id, None)

        for tr in store.with_status(TrackStatus.ACTIVE, TrackStatus.GHOST):
            fit = fits.get(tr.id)
            if fit is None or not fit.usable:
                continue
            conflict = find_interception(fit, manager.route, fix, ego.speed, tf, frames, tr.id,
                                         config.conflict)
            if conflict is None:
                continue
            pending = pending_maneuver(manager.route, fix, ego.speed, config.conflict.maneuver_window,
                                       config.conflict.speed_floor)
            w = decide_warning(conflict, tf, fit, tr.cls, ego.pose, frames, None, pending, limiter,
                               config.conflict)
            if w is not None:
                warnings.append(w)

        for tid in [tid for tid in fits if tid not in store.tracks
                    or store.tracks[tid].status is TrackStatus.DEAD]:
            del fits[tid]
        store.prune(tf)
    return PipelineResult(warnings, tracks_log, manager.reroutes)


# -- evaluation --------------------------------------------------------------

@dataclass
class EvalReport:
    first_warning_t: Optional[float]
    lead_time: Optional[float]
    direction_accuracy: Optional[float]
    false_warnings: int
    missed_conflicts: int
    n_warnings: int
    scenario: str = ""
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def actor_of(track_id: int) -> int:
    return track_id // ID_STRIDE


class _Truth:
    def __init__(self, truth: Sequence[dict], initial_heading: float):
        rows = defaultdict(list)
        for r in truth:
            rows[int(r["id"])].append((float(r["t"]), float(r["x"]), float(r["y"])))
        if 0 not in rows:
            raise MismatchedLogsError("truth log has no ego rows (id 0)")
        self.tracks = {i: np.array(sorted(v)) for i, v in rows.items()}
        ego = self.tracks.pop(0)
        self.ego_t, self.ego_xy = ego[:, 0], ego[:, 1:]
        d = np.diff(self.ego_xy, axis=0)
        dt = np.diff(self.ego_t)
        speed = np.hypot(d[:, 0], d[:, 1]) / dt
        heading = np.where(speed > 1e-9, np.arctan2(d[:, 1], d[:, 0]), np.nan)
        # hold the last known heading through stops
        last = initial_heading
        for i, h in enumerate(heading):
            if np.isnan(h):
                heading[i] = last
            last = heading[i]
        self.ego_speed = np.append(speed, speed[-1] if len(speed) else 0.0)
        self.ego_heading = np.append(heading, heading[-1] if len(heading) else initial_heading)

    def ego_pose(self, t: float) -> Pose2:
        i = int(np.clip(np.searchsorted(self.ego_t, t, side="right") - 1, 0, len(self.ego_t) - 1))
        x = float(np.interp(t, self.ego_t, self.ego_xy[:, 0]))
        y = float(np.interp(t, self.ego_t, self.ego_xy[:, 1]))
        return Pose2(Vec2(x, y), float(self.ego_heading[i]))

    def ego_speed_at(self, t: float) -> float:
        i = int(np.clip(np.searchsorted(self.ego_t, t, side="right") - 1, 0, len(self.ego_t) - 1))
        return float(self.ego_speed[i])

    def actor_path(self, actor: int, times: np.ndarray) -> np.ndarray:
        """Interpolated actor positions; NaN where the actor does not exist."""
        tr = self.tracks[actor]
        x = np.interp(times, tr[:, 0], tr[:, 1], left=np.nan, right=np.nan)
        y = np.interp(times, tr[:, 0], tr[:, 2], left=np.nan, right=np.nan)
        return np.column_stack([x, y])


def _true_conflict(truth: _Truth, actor: int, t: float, route: RoutePath, config: RunConfig
                   ) -> Optional[Conflict]:
    cc = config.conflict
    speed = truth.ego_speed_at(t)
    if speed < cc.speed_floor:
        return None
    fix = project(truth.ego_pose(t), route)
    rel_t = np.arange(int(round(cc.horizon / cc.step)) + 1) * cc.step
    path = truth.actor_path(actor, t + rel_t)
    ok = ~np.isnan(path[:, 0])
    if not ok.any():
        return None
    arc = np.full(len(rel_t), -np.inf)
    dist = np.full(len(rel_t), np.inf)
    arc[ok], _, dist[ok], _ = project_points(path[ok], route)
    inside = (dist <= cc.corridor_half_width) & (arc > fix.s)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        return None
    first = last = hits[0]
    while last + 1 < len(inside) and inside[last + 1]:
        last += 1
    ds = float(arc[(first + last) // 2]) - fix.s
    return Conflict(actor, route.point_at(fix.s + ds), ds, ds / speed, float(rel_t[first]),
                    float(rel_t[last]))


def evaluate(warnings: Sequence[dict], truth: Sequence[dict], config: RunConfig,
             route: RoutePath, scenario: str = "", seed: Optional[int] = None) -> EvalReport:
    """Score a warnings log against scenario ground truth.

    A warning is *false* when its road user's true path never enters the
    corridor ahead of the ego within the prediction horizon after the
    warning. A *missed conflict* is a road user that truly triggers the
    warning rule at some frame but never gets a warning.
    """
    tr = _Truth(truth, config.initial_heading)
    cc = config.conflict
    by_actor: Dict[int, List[dict]] = defaultdict(list)
    for w in warnings:
        a = actor_of(int(w["id"]))
        if a not in tr.tracks:
            raise MismatchedLogsError(f"warning for id {w['id']} has no matching truth actor {a}")
        by_actor[a].append(w)

    false_w, correct_dir = 0, 0
    for a, ws in by_actor.items():
        for w in ws:
            t = float(w["t"])
            fix = project(tr.ego_pose(t), route)
            path = tr.actor_path(a, t + np.arange(int(round(cc.horizon / cc.step)) + 1) * cc.step)
            path = path[~np.isnan(path[:, 0])]
            entered = False
            if len(path):
                arc, _, dist, _ = project_points(path, route)
                entered = bool(np.any((dist <= cc.corridor_half_width) & (arc > fix.s)))
            false_w += not entered
            p = tr.actor_path(a, np.array([t + cc.prompt_duration]))[0]
            if np.isnan(p[0]):
                p = tr.actor_path(a, np.array([t]))[0]
            lat = world_to_vehicle(Vec2(*p), tr.ego_pose(t)).y
            correct_dir += direction_word(lat, cc.ahead_half_width).value == w["direction"]

    missed = 0
    for a in tr.tracks:
        if a in by_actor:
            continue
        for t in tr.ego_t:
            c = _true_conflict(tr, a, float(t), route, config)
            if c is not None and warning_gate(c, cc) is not None:
                missed += 1
                break

    leads = []
    for ws in by_actor.values():
        early = [float(w["t"]) for w in ws if w["severity"] == Severity.EARLY.value]
        emerg = [float(w["t"]) for w in ws if w["severity"] == Severity.EMERGENCY.value]
        if early and emerg:
            t_e = min(early)
            later = [t for t in emerg if t >= t_e]
            if later:
                leads.append(min(later) - t_e)

    n = len(warnings)
    return EvalReport(
        first_warning_t=min((float(w["t"]) for w in warnings), default=None),
        lead_time=min(leads) if leads else None,
        direction_accuracy=correct_dir / n if n else None,
        false_warnings=false_w,
        missed_conflicts=missed,
        n_warnings=n,
        scenario=scenario,
        seed=seed,
    )


def aggregate(reports: Sequence[EvalReport]) -> dict:
    """Means across seeds (over the runs where a value exists) and summed counts."""
    def mean(vals):
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    return {
        "runs": len(reports),
        "mean_first_warning_t": mean(r.first_warning_t for r in reports),
        "mean_lead_time": mean(r.lead_time for r in reports),
        "mean_direction_accuracy": mean(r.direction_accuracy for r in reports),
        "mean_false_warnings": mean(r.false_warnings for r in reports),
        "mean_missed_conflicts": mean(r.missed_conflicts for r in reports),
        "runs_with_lead_time": sum(r.lead_time is not None for r in reports),
    }
