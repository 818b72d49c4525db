"""Per-axis linear motion model for tracked road users.

Longitudinal (x) and lateral (y) analysis-frame coordinates are each
regressed on time by ordinary least squares::

    lat(t)  = b0_lat  + b1_lat  * (t - t_ref)
    long(t) = b0_long + b1_long * (t - t_ref)

A monocular camera ranges poorly, so the longitudinal axis needs more
samples before it is trusted (30) than the lateral axis (12).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .core import Vec2


class FitError(ValueError):
    pass


class InvalidFitError(FitError):
    pass


@dataclass
class PredictionConfig:
    window: int = 54            # most recent samples used (1.5 s at 36 Hz)
    min_lat_samples: int = 12
    min_long_samples: int = 30
    v_max: float = 3.5          # m/s, jogging pace


@dataclass(frozen=True)
class TrajectoryFit:
    t_ref: float
    b0_lat: float
    b1_lat: float
    b0_long: float
    b1_long: float
    n_samples: int
    lat_valid: bool
    long_valid: bool
    speed_gate_failed: bool

    @property
    def velocity(self) -> Vec2:
        """Fitted velocity as (longitudinal, lateral)."""
        return Vec2(self.b1_long, self.b1_lat)

    @property
    def usable(self) -> bool:
        """True when the fit may drive warnings and ghost prediction."""
        return self.lat_valid and not self.speed_gate_failed


def ols_line(t: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Intercept at ``t = 0`` and slope of the least-squares line.

    Uses centred sums, which stay well conditioned when ``t`` is far from 0.
    """
    t_mean = t.mean()
    dt = t - t_mean
    sxx = float(dt @ dt)
    if sxx == 0.0:
        raise FitError("all sample timestamps are equal; slope is undefined")
    slope = float(dt @ (y - y.mean())) / sxx
    return float(y.mean() - slope * t_mean), slope


def _window(samples: Sequence[Tuple[float, Vec2]], now: float, size: int):
    usable = [s for s in samples if s[0] <= now] if samples and samples[-1][0] > now else list(samples)
    return usable[-size:]


def fit_track(track, now: float, config: PredictionConfig = PredictionConfig()) -> TrajectoryFit:
    """Fit the linear motion model over the track's most recent samples.

    ``track`` only needs a ``samples`` sequence of ``(t, Vec2)`` pairs in the
    analysis frame. Samples later than ``now`` are ignored.
    """
    win = _window(track.samples, now, config.window)
    n = len(win)
    if n < 2:
        raise FitError(f"need at least 2 samples to fit, got {n}")
    t = np.fromiter((s[0] for s in win), dtype=float, count=n)
    xy = np.array([s[1] for s in win], dtype=float)
    t_ref = float(t[0])
    tr = t - t_ref

    b0_lat, b1_lat = ols_line(tr, xy[:, 1])
    lat_valid = n >= config.min_lat_samples
    long_valid = n >= config.min_long_samples
    if long_valid:
        b0_long, b1_long = ols_line(tr, xy[:, 0])
    else:
        # not enough range samples: hold the pedestrian at its last range
        b0_long, b1_long = float(xy[-1, 0]), 0.0
    speed_failed = math.hypot(b1_lat, b1_long) > config.v_max
    return TrajectoryFit(t_ref, b0_lat, b1_lat, b0_long, b1_long, n, lat_valid, long_valid,
                         speed_failed)


def predict_position(fit: TrajectoryFit, t: float) -> Vec2:
    """Analysis-frame position predicted at time ``t``."""
    if not fit.lat_valid:
        raise InvalidFitError(f"fit has {fit.n_samples} samples; lateral model not valid")
    if t < fit.t_ref:
        raise ValueError(f"t={t} precedes the fit's time origin {fit.t_ref}")
    dt = t - fit.t_ref
    return Vec2(fit.b0_long + fit.b1_long * dt, fit.b0_lat + fit.b1_lat * dt)


def predict_path(fit: TrajectoryFit, times: np.ndarray) -> np.ndarray:
    """Vectorised :func:`predict_position`; returns an ``(n, 2)`` array."""
    if not fit.lat_valid:
        raise InvalidFitError(f"fit has {fit.n_samples} samples; lateral model not valid")
    dt = np.asarray(times, dtype=float) - fit.t_ref
    return np.column_stack([fit.b0_long + fit.b1_long * dt, fit.b0_lat + fit.b1_lat * dt])
