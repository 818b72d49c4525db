"""
Tracks, ghosts and the linear motion model
==========================================

A pedestrian is seen for one second, disappears for half a second and
comes back under a new camera id. The ghost keeps the predicted path
alive and the new id is merged back.
"""

from pedwarn.core import Detection, FrameSet, ObjectClass, Vec2
from pedwarn.ego_state import initial_state
from pedwarn.prediction import fit_track, predict_position
from pedwarn.tracking import TrackStore

store = TrackStore()
frames = FrameSet()
fits = {}


def walker(t):
    return Vec2(18.0, -4.0 + 1.4 * t)


for k in range(37):
    t = k / 36
    store.tick(t, fits)
    track = store.ingest(Detection(t, 100, ObjectClass.PEDESTRIAN, walker(t)), initial_state(t), frames)
    if len(track.samples) >= 2:
        fits[track.id] = fit_track(track, t)
    if k in (5, 11, 29, 36):
        f = fits[track.id]
        print(f"n={f.n_samples:2d}  lateral fit {f.lat_valid!s:5}  longitudinal fit {f.long_valid!s:5}"
              f"  velocity {f.velocity.y:+.2f} m/s lateral")

# camera loses the pedestrian
t_gap = 1.5
store.tick(t_gap, fits)
tr = store[100]
print(f"\nat t={t_gap}: track 100 is {tr.status.value}, "
      f"predicted at {tuple(round(v, 2) for v in predict_position(fits[100], t_gap))}")

# it comes back as id 101
det = Detection(t_gap, 101, ObjectClass.PEDESTRIAN, walker(t_gap))
merged = store.ingest(det, initial_state(t_gap), frames)
print(f"id 101 merged into track {merged.id}; merged ids {merged.merged_ids}, status {merged.status.value}")

# without further detections the ghost dies 4 s after the last one
for now in (3.0, 5.49, 5.51):
    store.tick(now, fits)
    print(f"t={now:4.2f}: {store[100].status.value}")
