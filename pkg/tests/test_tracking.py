import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pedwarn.core import Detection, FrameSet, ObjectClass, StaleEgoError, Vec2
from pedwarn.prediction import fit_track
from pedwarn.tracking import (DuplicateSampleError, TrackingConfig, TrackStatus, TrackStore,
                              ingest, tick)

from conftest import RATE, ego_at

PED = ObjectClass.PEDESTRIAN
FRAMES = FrameSet()


def walk(store, track_id, n, x=20.0, y0=-3.0, vy=1.4, t0=0.0, cls=PED):
    """Feed ``n`` detections of a walker (stationary ego at the origin)."""
    for k in range(n):
        t = t0 + k / RATE
        store.ingest(Detection(t, track_id, cls, Vec2(x, y0 + vy * (t - t0))), ego_at(t), FRAMES)
    return store.tracks[store.resolve(track_id)]


def ghost_store(n=40, config=None):
    store = TrackStore(config or TrackingConfig())
    tr = walk(store, 1, n)
    fits = {1: fit_track(tr, tr.last_seen)}
    return store, tr, fits


def test_creation():
    store = ingest(TrackStore(), Detection(0.0, 7, PED, Vec2(10, 0)), ego_at(0.0), FRAMES)
    assert len(store) == 1
    tr = store[7]
    assert tr.status is TrackStatus.ACTIVE and len(tr.samples) == 1


def test_twelve_detections_span():
    store = TrackStore()
    tr = walk(store, 3, 12)
    assert len(store) == 1 and len(tr.samples) == 12
    assert tr.samples[-1][0] - tr.samples[0][0] == pytest.approx(11 / 36, abs=1e-12)


@pytest.mark.parametrize("gap,status,emits", [(0.1, TrackStatus.ACTIVE, False),
                                              (0.2, TrackStatus.ACTIVE, False),
                                              (0.21, TrackStatus.GHOST, True),
                                              (3.99, TrackStatus.GHOST, True),
                                              (4.0, TrackStatus.GHOST, True),
                                              (4.01, TrackStatus.DEAD, False)])
def test_lifecycle_boundaries(gap, status, emits):
    store, tr, fits = ghost_store()
    now = tr.last_seen + gap
    tick(store, now, fits)
    assert tr.status is status
    assert (1 in store.ghost_predictions(now)) == emits


def test_no_fit_goes_dead_directly():
    store = TrackStore()
    tr = walk(store, 1, 5)
    fits = {1: fit_track(tr, tr.last_seen)}
    assert not fits[1].usable
    store.tick(tr.last_seen + 0.25, fits)
    assert tr.status is TrackStatus.DEAD


def test_dead_stays_dead():
    store, tr, fits = ghost_store()
    store.tick(tr.last_seen + 4.5, fits)
    store.tick(tr.last_seen + 4.5, fits)
    assert tr.status is TrackStatus.DEAD


def test_ghost_prediction_follows_fit():
    store, tr, fits = ghost_store()
    now = tr.last_seen + 2.0
    store.tick(now, fits)
    p = store.ghost_predictions(now)[1]
    assert p.x == pytest.approx(20.0, abs=1e-9)
    assert p.y == pytest.approx(-3.0 + 1.4 * now, abs=1e-9)


def _switch_det(store, tr, fits, offset, new_id=9, cls=PED, dt=0.5):
    t = tr.last_seen + dt
    store.tick(t, fits)
    pred = store.ghost_predictions(t)[1]
    return Detection(t, new_id, cls, Vec2(pred.x, pred.y + offset)), t


@pytest.mark.parametrize("offset", [0.3, 0.5])
def test_id_switch_merged(offset):
    store, tr, fits = ghost_store()
    d, t = _switch_det(store, tr, fits, offset)
    assert store.reassociate(d, store.ghost_predictions(t)) == 1
    store.ingest(d, ego_at(t), FRAMES)
    assert tr.merged_ids == [9] and tr.status is TrackStatus.ACTIVE
    assert store.resolve(9) == 1 and 9 not in store.tracks


def test_far_detection_not_merged():
    store, tr, fits = ghost_store()
    d, t = _switch_det(store, tr, fits, 10.0)
    assert store.reassociate(d, store.ghost_predictions(t)) is None


def test_implied_speed_gate():
    # prediction is 0.3 m away but reaching it from the last sample needs 6 m/s
    store, tr, fits = ghost_store()
    t = tr.last_seen + 0.5
    store.tick(t, fits)
    last = tr.last_position
    d = Detection(t, 9, PED, Vec2(last.x, last.y + 3.0))
    predicted = {1: Vec2(last.x, last.y + 2.7)}
    assert math.hypot(0, 3.0) / 0.5 == pytest.approx(6.0)
    assert store.reassociate(d, predicted) is None


def test_merge_kill_switch():
    store, tr, fits = ghost_store(config=TrackingConfig(merge=False))
    d, t = _switch_det(store, tr, fits, 0.3)
    assert store.reassociate(d, store.ghost_predictions(t)) is None


def test_class_mismatch_never_merged():
    store, tr, fits = ghost_store()
    d, t = _switch_det(store, tr, fits, 0.1, cls=ObjectClass.BICYCLE)
    assert store.reassociate(d, store.ghost_predictions(t)) is None


def test_only_ghosts_merge():
    store, tr, fits = ghost_store()
    t = tr.last_seen + 0.1
    store.tick(t, fits)
    assert tr.status is TrackStatus.ACTIVE
    d = Detection(t, 9, PED, tr.last_position)
    assert store.reassociate(d, {1: tr.last_position}) is None


def test_nearest_ghost_wins():
    store = TrackStore()
    a = walk(store, 1, 40, x=20.0)
    b = walk(store, 2, 40, x=21.0)
    fits = {1: fit_track(a, a.last_seen), 2: fit_track(b, b.last_seen)}
    t = a.last_seen + 0.5
    store.tick(t, fits)
    pb = store.ghost_predictions(t)[2]
    d = Detection(t, 9, PED, Vec2(pb.x - 0.2, pb.y))
    assert store.reassociate(d, store.ghost_predictions(t)) == 2


def test_duplicate_and_older_samples_rejected():
    store = TrackStore()
    walk(store, 1, 3)
    t = 2 / RATE
    with pytest.raises(DuplicateSampleError):
        store.ingest(Detection(t, 1, PED, Vec2(20, 0)), ego_at(t), FRAMES)
    with pytest.raises(DuplicateSampleError):
        store.ingest(Detection(0.0, 1, PED, Vec2(20, 0)), ego_at(0.0), FRAMES)


def test_stale_ego_rejected():
    with pytest.raises(StaleEgoError):
        TrackStore().ingest(Detection(1.0, 1, PED, Vec2(20, 0)), ego_at(0.5), FRAMES)


def test_buffer_capped_without_reordering():
    store = TrackStore(TrackingConfig(max_samples=50))
    tr = walk(store, 1, 80)
    ts = [s[0] for s in tr.samples]
    assert len(ts) == 50
    assert np.allclose(np.diff(ts), 1 / RATE)
    assert ts[-1] == pytest.approx(79 / RATE)


def test_prune_forgets_old_dead_tracks():
    store, tr, fits = ghost_store()
    store.tick(tr.last_seen + 11.0, fits)
    store.prune(tr.last_seen + 11.0)
    assert len(store) == 0


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 6.0))
def test_ghost_lifetime_interval(gap):
    store, tr, fits = ghost_store()
    store.tick(tr.last_seen + gap, fits)
    if gap <= 0.2:
        assert tr.status is TrackStatus.ACTIVE
    elif gap <= 4.0:
        assert tr.status is TrackStatus.GHOST
    else:
        assert tr.status is TrackStatus.DEAD
