"""Per-object sample buffers with ghosting and ID-switch re-association.

A track is *active* while it keeps receiving detections. Once it misses
detections for longer than ``t_miss`` it becomes a *ghost* (if its motion
model is usable) and its position keeps being extrapolated for up to
``ghost_horizon`` seconds after the last detection; after that it is
*dead*. A detection carrying a new camera id that lands close to a ghost's
extrapolated position is merged back into the ghost.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Mapping, Optional, Tuple

from .core import CAMERA_PERIOD, Detection, FrameSet, ObjectClass, Vec2, to_analysis, to_world
from .prediction import TrajectoryFit, predict_position


class DuplicateSampleError(ValueError):
    pass


class TrackStatus(str, enum.Enum):
    ACTIVE = "active"
    GHOST = "ghost"
    DEAD = "dead"


@dataclass
class TrackingConfig:
    t_miss: float = 0.2          # s without detections before ghosting
    ghost_horizon: float = 4.0   # s of extrapolation after the last detection
    r_gate: float = 2.0          # m, re-association gate radius
    v_max: float = 3.5           # m/s, max implied speed of a merge
    merge: bool = True
    max_samples: int = 360       # 10 s at 36 Hz


@dataclass
class PedTrack:
    id: int
    cls: ObjectClass
    samples: Deque[Tuple[float, Vec2]]
    last_seen: float
    status: TrackStatus = TrackStatus.ACTIVE
    merged_ids: List[int] = field(default_factory=list)

    @property
    def last_position(self) -> Vec2:
        return self.samples[-1][1]


class TrackStore:
    """Owns every track of one pipeline run.

    ``aliases`` maps camera ids that were merged into another track onto
    that track's id so later detections with the new id keep landing there.
    """

    def __init__(self, config: Optional[TrackingConfig] = None):
        self.config = config or TrackingConfig()
        self.tracks: Dict[int, PedTrack] = {}
        self.aliases: Dict[int, int] = {}
        self.fits: Dict[int, TrajectoryFit] = {}

    def __len__(self):
        return len(self.tracks)

    def __getitem__(self, track_id: int) -> PedTrack:
        return self.tracks[track_id]

    def resolve(self, camera_id: int) -> Optional[int]:
        if camera_id in self.aliases:
            return self.aliases[camera_id]
        return camera_id if camera_id in self.tracks else None

    def with_status(self, *statuses: TrackStatus) -> List[PedTrack]:
        return [tr for tr in self.tracks.values() if tr.status in statuses]

    def ingest(self, det: Detection, ego, frames: FrameSet) -> PedTrack:
        """Append ``det`` (moved to the analysis frame) to its track.

        ``ego`` is a :class:`~pedwarn.ego_state.VehicleState` (anything with
        ``t`` and ``pose``) aligned with the detection time.
        """
        p = to_analysis(to_world(det, ego.pose, ego.t, CAMERA_PERIOD), frames)
        track_id = self.resolve(det.track_id)
        if track_id is None:
            track_id = self.reassociate(det, self.ghost_predictions(det.t), p)
            if track_id is not None:
                self.tracks[track_id].merged_ids.append(det.track_id)
                self.aliases[det.track_id] = track_id
        if track_id is None:
            track = PedTrack(det.track_id, det.cls, deque(maxlen=self.config.max_samples), det.t)
            self.tracks[det.track_id] = track
        else:
            track = self.tracks[track_id]
            last_t = track.samples[-1][0]
            if det.t == last_t:
                raise DuplicateSampleError(f"track {track_id} already has a sample at t={det.t}")
            if det.t < last_t:
                raise DuplicateSampleError(
                    f"track {track_id}: sample t={det.t} is older than t={last_t}")
        track.samples.append((det.t, p))
        track.last_seen = det.t
        track.status = TrackStatus.ACTIVE
        return track

    def tick(self, now: float, fits: Optional[Mapping[int, TrajectoryFit]] = None) -> None:
        """Advance every track's lifecycle to time ``now``."""
        if fits is not None:
            self.fits = dict(fits)
        cfg = self.config
        for tr in self.tracks.values():
            gap = now - tr.last_seen
            if gap < 0:
                raise ValueError(f"tick at t={now} precedes last detection of track {tr.id}")
            if gap > cfg.ghost_horizon:
                tr.status = TrackStatus.DEAD
            elif gap > cfg.t_miss:
                if tr.status is TrackStatus.DEAD:
                    continue
                fit = self.fits.get(tr.id)
                tr.status = TrackStatus.GHOST if fit is not None and fit.usable else TrackStatus.DEAD

    def ghost_predictions(self, t: float) -> Dict[int, Vec2]:
        """Extrapolated analysis-frame positions of all ghost tracks at ``t``."""
        out = {}
        for tr in self.with_status(TrackStatus.GHOST):
            fit = self.fits.get(tr.id)
            if fit is not None and fit.usable and t - tr.last_seen <= self.config.ghost_horizon:
                out[tr.id] = predict_position(fit, t)
        return out

    def reassociate(self, det: Detection, predicted: Mapping[int, Vec2],
                    p_analysis: Optional[Vec2] = None) -> Optional[int]:
        """Ghost id that ``det`` most plausibly continues, or None.

        A candidate must be a ghost of the same class whose prediction lies
        within ``r_gate`` of the detection, and reaching the detection from
        the ghost's last observed position must not need more than ``v_max``.
        """
        cfg = self.config
        if not cfg.merge:
            return None
        if p_analysis is None:
            p_analysis = det.pos
        best, best_d = None, math.inf
        for gid, pred in sorted(predicted.items()):
            tr = self.tracks.get(gid)
            if tr is None or tr.status is not TrackStatus.GHOST or tr.cls is not det.cls:
                continue
            d = math.hypot(p_analysis.x - pred.x, p_analysis.y - pred.y)
            if d > cfg.r_gate:
                continue
            gap = det.t - tr.last_seen
            if gap <= 0:
                continue
            last = tr.last_position
            if math.hypot(p_analysis.x - last.x, p_analysis.y - last.y) / gap > cfg.v_max:
                continue
            if d < best_d:
                best, best_d = gid, d
        return best

    def prune(self, now: float, keep: float = 10.0) -> None:
        """Forget dead tracks not seen for ``keep`` seconds."""
        for tid in [tid for tid, tr in self.tracks.items()
                    if tr.status is TrackStatus.DEAD and now - tr.last_seen > keep]:
            del self.tracks[tid]
            self.fits.pop(tid, None)
            for alias in [a for a, target in self.aliases.items() if target == tid]:
                del self.aliases[alias]


def ingest(store: TrackStore, det: Detection, ego, frames: FrameSet) -> TrackStore:
    store.ingest(det, ego, frames)
    return store


def tick(store: TrackStore, now: float, fits: Optional[Mapping[int, TrajectoryFit]] = None) -> TrackStore:
    store.tick(now, fits)
    return store
