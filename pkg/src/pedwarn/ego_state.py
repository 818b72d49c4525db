"""Ego-vehicle state estimation.

A six-state extended Kalman filter over ``(x, y, yaw, pitch, roll, v)``.
The IMU drives the prediction step (dead reckoning at 200 Hz); wheel speed,
GPS fixes and the accelerometer's gravity direction are fused as
measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .core import Pose2, Vec2, normalize_angle

GRAVITY = 9.80665

IX, IY, IYAW, IPITCH, IROLL, IV = range(6)
_EYE6 = np.eye(6)
_DIAG = np.diag_indices(6)
STATE_NAMES = ("x", "y", "yaw", "pitch", "roll", "v")


class FilterError(ValueError):
    pass


class NonMonotonicTimestampError(FilterError):
    pass


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: tuple
    accel: tuple

    def to_dict(self) -> dict:
        return {"t": self.t, "kind": "imu", "gyro": list(self.gyro), "accel": list(self.accel)}


@dataclass(frozen=True)
class WheelSample:
    t: float
    speed: float

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"wheel speed must be >= 0, got {self.speed}")

    def to_dict(self) -> dict:
        return {"t": self.t, "kind": "wheel", "speed": self.speed}


@dataclass(frozen=True)
class GpsFix:
    t: float
    pos: Vec2
    sigma_pos: float

    def __post_init__(self):
        if not self.sigma_pos > 0:
            raise ValueError(f"sigma_pos must be > 0, got {self.sigma_pos}")
        object.__setattr__(self, "pos", Vec2(*self.pos))

    def to_dict(self) -> dict:
        return {"t": self.t, "kind": "gps", "pos": [self.pos.x, self.pos.y],
                "sigma_pos": self.sigma_pos}


EgoRecord = Union[ImuSample, WheelSample, GpsFix]


def ego_record_from_dict(d: dict) -> EgoRecord:
    kind = d.get("kind")
    if kind == "imu":
        return ImuSample(float(d["t"]), tuple(map(float, d["gyro"])), tuple(map(float, d["accel"])))
    if kind == "wheel":
        return WheelSample(float(d["t"]), float(d["speed"]))
    if kind == "gps":
        return GpsFix(float(d["t"]), Vec2(*map(float, d["pos"])), float(d["sigma_pos"]))
    raise ValueError(f"unknown ego record kind: {kind!r}")


@dataclass
class EgoNoise:
    """Sensor noise standard deviations (per sample)."""

    gyro: float = 0.01       # rad/s
    accel: float = 0.1       # m/s^2
    wheel: float = 0.05      # m/s
    gps: float = 0.05        # m, RTK grade
    tilt: float = 0.2        # rad; deliberately loose -> low-gain attitude update
    pos_process: float = 0.01  # m/sqrt(s), unmodelled motion
    imu_rate: float = 200.0
    gps_rate: float = 10.0
    max_measurement_lag: float = 0.01  # s


@dataclass(frozen=True)
class VehicleState:
    t: float
    pose: Pose2
    pitch: float
    roll: float
    speed: float
    covariance: np.ndarray = field(repr=False, compare=False)

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.pose.position.x, self.pose.position.y, self.pose.heading,
                         self.pitch, self.roll, self.speed])

    @classmethod
    def from_vector(cls, t: float, x: np.ndarray, P: np.ndarray) -> "VehicleState":
        P = 0.5 * (P + P.T)
        P.setflags(write=False)
        return cls(t, Pose2(Vec2(float(x[IX]), float(x[IY])), float(x[IYAW])),
                   float(x[IPITCH]), float(x[IROLL]), max(float(x[IV]), 0.0), P)


def initial_state(t: float = 0.0, position: Sequence[float] = (0.0, 0.0), heading: float = 0.0,
                  speed: float = 0.0, sigmas: Sequence[float] = (0.5, 0.5, 0.02, 0.05, 0.05, 0.5)
                  ) -> VehicleState:
    x = np.array([position[0], position[1], heading, 0.0, 0.0, speed], dtype=float)
    return VehicleState.from_vector(t, x, np.diag(np.square(np.asarray(sigmas, dtype=float))))


def _predict(x: np.ndarray, P: np.ndarray, dt: float, imu: ImuSample, noise: EgoNoise):
    yaw, pitch, v = x[IYAW], x[IPITCH], x[IV]
    c, s = math.cos(yaw), math.sin(yaw)
    gx, gy, gz = imu.gyro
    ax = imu.accel[0]

    x = x.copy()
    x[IX] += v * c * dt
    x[IY] += v * s * dt
    x[IYAW] = normalize_angle(yaw + gz * dt)
    x[IPITCH] += gy * dt
    x[IROLL] += gx * dt
    # gravity leaks into the forward specific force when pitched
    x[IV] += (ax - GRAVITY * math.sin(pitch)) * dt

    F = _EYE6.copy()
    F[IX, IYAW] = -v * s * dt
    F[IX, IV] = c * dt
    F[IY, IYAW] = v * c * dt
    F[IY, IV] = s * dt
    F[IV, IPITCH] = -GRAVITY * math.cos(pitch) * dt

    qg = (noise.gyro * dt) ** 2
    qp = noise.pos_process ** 2 * dt
    P = F @ P @ F.T
    P[_DIAG] += (qp, qp, qg, qg, qg, (noise.accel * dt) ** 2)
    return x, P


def _measurement(meas, noise: EgoNoise):
    """``(observed state indices, z, R)`` for a direct-observation measurement."""
    if isinstance(meas, WheelSample):
        return [IV], np.array([meas.speed]), np.array([[noise.wheel ** 2]])
    if isinstance(meas, GpsFix):
        return ([IX, IY], np.array([meas.pos.x, meas.pos.y]), np.eye(2) * meas.sigma_pos ** 2)
    if isinstance(meas, ImuSample):
        f = meas.accel
        z = np.array([math.atan2(f[0], math.hypot(f[1], f[2])), math.atan2(-f[1], f[2])])
        return [IPITCH, IROLL], z, np.eye(2) * noise.tilt ** 2
    raise TypeError(f"unsupported measurement {type(meas).__name__}")


def _update(x: np.ndarray, P: np.ndarray, idx: list, z: np.ndarray, R: np.ndarray):
    innovation = z - x[idx]
    if not np.all(np.isfinite(innovation)):
        raise FilterError(f"non-finite innovation {innovation}")
    PHt = P[:, idx]
    S = PHt[idx, :] + R
    if len(idx) == 1:
        det = S[0, 0]
        S_inv = np.array([[1.0]]) / det if det > 0 else None
    else:
        det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
        S_inv = np.array([[S[1, 1], -S[0, 1]], [-S[1, 0], S[0, 0]]]) / det if det > 0 else None
    if S_inv is None or not np.isfinite(det) or det < 1e-300:
        raise FilterError("singular innovation covariance; check measurement noise")
    K = PHt @ S_inv
    x = x + K @ innovation
    x[IYAW] = normalize_angle(x[IYAW])
    x[IV] = max(x[IV], 0.0)
    # Joseph form keeps P symmetric PSD
    A = _EYE6.copy()
    A[:, idx] -= K
    P = A @ P @ A.T + K @ R @ K.T
    return x, 0.5 * (P + P.T), innovation, S


def _check_lag(t_state: float, t: float, noise: EgoNoise):
    if abs(t - t_state) > noise.max_measurement_lag + 1e-12:
        raise NonMonotonicTimestampError(
            f"measurement t={t} is {t - t_state:+.4f} s from state t={t_state}")


def ekf_predict(state: VehicleState, imu: ImuSample, noise: EgoNoise = EgoNoise()) -> VehicleState:
    """Propagate the state to ``imu.t`` by dead reckoning.

    ``x += v cos(yaw) dt``, ``y += v sin(yaw) dt``, ``yaw += gyro_z dt`` and
    ``v += accel_x dt`` (gravity-compensated with the pitch estimate).
    """
    dt = imu.t - state.t
    if dt < 0:
        raise NonMonotonicTimestampError(f"imu t={imu.t} precedes state t={state.t}")
    x, P = _predict(state.mean, np.array(state.covariance), dt, imu, noise)
    return VehicleState.from_vector(imu.t, x, P)


def ekf_update_with_innovation(state: VehicleState, meas: Union[WheelSample, GpsFix, ImuSample],
                               noise: EgoNoise = EgoNoise()):
    """Like :func:`ekf_update` but also returns ``(innovation, S)``."""
    _check_lag(state.t, meas.t, noise)
    x, P, innov, S = _update(state.mean, np.array(state.covariance), *_measurement(meas, noise))
    return VehicleState.from_vector(state.t, x, P), innov, S


def ekf_update(state: VehicleState, meas: Union[WheelSample, GpsFix, ImuSample],
               noise: EgoNoise = EgoNoise()) -> VehicleState:
    """Kalman measurement update.

    Wheel samples observe ``v``, GPS fixes observe ``(x, y)`` and IMU samples
    observe pitch/roll through the gravity direction (low gain).
    """
    return ekf_update_with_innovation(state, meas, noise)[0]


class EgoFilter:
    """Sequential owner of the ego EKF; feed records in arrival order.

    Works on raw arrays internally; :attr:`state` builds the immutable
    snapshot on demand.
    """

    def __init__(self, state: VehicleState, noise: Optional[EgoNoise] = None,
                 tilt_updates: bool = True):
        self.t = state.t
        self.x = state.mean
        self.P = np.array(state.covariance)
        self.noise = noise or EgoNoise()
        self.tilt_updates = tilt_updates
        self.last_innovation = None

    @property
    def state(self) -> VehicleState:
        return VehicleState.from_vector(self.t, self.x, self.P.copy())

    def feed(self, rec: EgoRecord) -> None:
        if isinstance(rec, ImuSample):
            dt = rec.t - self.t
            if dt < 0:
                raise NonMonotonicTimestampError(f"imu t={rec.t} precedes state t={self.t}")
            self.x, self.P = _predict(self.x, self.P, dt, rec, self.noise)
            self.t = rec.t
            if not self.tilt_updates:
                return
        _check_lag(self.t, rec.t, self.noise)
        self.x, self.P, innov, S = _update(self.x, self.P, *_measurement(rec, self.noise))
        self.last_innovation = (rec, innov, S)

    def run(self, records: Iterable[EgoRecord]) -> Iterator[VehicleState]:
        for rec in records:
            self.feed(rec)
            yield self.state


def bootstrap_state(records: Sequence[EgoRecord], heading: float = 0.0) -> VehicleState:
    """Initial state from the head of an ego log (first GPS fix and wheel speed)."""
    t0 = records[0].t if records else 0.0
    pos, speed = (0.0, 0.0), 0.0
    for rec in records:
        if rec.t - t0 > 0.5:
            break
        if isinstance(rec, GpsFix) and pos == (0.0, 0.0):
            pos = (rec.pos.x, rec.pos.y)
        elif isinstance(rec, WheelSample) and speed == 0.0:
            speed = rec.speed
    return initial_state(t0, pos, heading, speed)
