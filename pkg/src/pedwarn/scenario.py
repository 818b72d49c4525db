"""Synthetic scenarios: ground truth, camera detections and ego sensor logs.

The camera is a pinhole looking straight ahead from ``mount_height`` above a
flat road. Range comes from the image row of the foot point, so one pixel of
row error costs roughly ``d**2 / (f * h)`` metres at range ``d`` while the
lateral coordinate stays accurate; this is the monocular ground-plane
ranging weakness the warning logic has to live with.

Two systematic camera artefacts are available on top of pixel jitter:

* dropout with optional ID switch on resumption (one road user then shows
  up under several camera ids);
* latency over-compensation when the ego moves: the camera shifts the foot
  row to make up for the distance driven during ``lag_frames`` frames, but
  computes the shift for a fixed reference range. Far objects get pulled
  towards the car and the error melts away as the car closes in, which
  bends a straight crossing into a sideways bell.

Camera ids encode the scripted actor: ``actor_id * ID_STRIDE + n_switches``.
Truth rows use ``id = actor_id`` (1-based); the ego's own truth is ``id = 0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Detection, ObjectClass, Vec2
from .ego_state import GRAVITY, EgoNoise, EgoRecord, GpsFix, ImuSample, WheelSample

ID_STRIDE = 100
MPH = 0.44704
PED_MAX_SPEED = 3.5


class ScenarioError(ValueError):
    pass


@dataclass
class CameraModel:
    hfov_deg: float = 40.0
    width: int = 1280
    height: int = 960
    mount_height: float = 1.3
    rate: float = 36.0
    pixel_jitter: float = 0.5          # px, 1-sigma
    quantize: bool = True
    dropout_prob: float = 0.0          # per frame
    id_switch_prob: float = 0.0        # per dropout
    lag_frames: int = 2
    overcorrection_ref_range: float = 10.0  # m

    def __post_init__(self):
        if not 0.0 < self.hfov_deg < 180.0:
            raise ScenarioError(f"hfov must be in (0, 180) degrees, got {self.hfov_deg}")
        if not self.rate > 0:
            raise ScenarioError(f"camera rate must be > 0, got {self.rate}")

    @property
    def focal_px(self) -> float:
        return 0.5 * self.width / math.tan(math.radians(0.5 * self.hfov_deg))

    @property
    def half_fov(self) -> float:
        return math.radians(0.5 * self.hfov_deg)

    @classmethod
    def noiseless(cls, **kw) -> "CameraModel":
        base = dict(pixel_jitter=0.0, quantize=False, dropout_prob=0.0, id_switch_prob=0.0,
                    lag_frames=0)
        base.update(kw)
        return cls(**base)


def project_to_pixel(p: Vec2, cam: CameraModel) -> Tuple[float, float]:
    """Image column/row of a ground point given in the vehicle frame."""
    f = cam.focal_px
    return 0.5 * cam.width - f * p.y / p.x, 0.5 * cam.height + f * cam.mount_height / p.x


def pixel_to_ground(u: float, v: float, cam: CameraModel) -> Optional[Vec2]:
    """Intersect the pixel ray with the road plane; None above the horizon."""
    dv = v - 0.5 * cam.height
    if dv <= 0:
        return None
    f = cam.focal_px
    x = f * cam.mount_height / dv
    return Vec2(x, (0.5 * cam.width - u) * x / f)


def camera_observe(truth: Vec2, cam: CameraModel, rng: Optional[np.random.Generator] = None,
                   ego_shift: float = 0.0) -> Optional[Vec2]:
    """One noisy camera measurement of a vehicle-frame ground point.

    ``ego_shift`` is the distance the ego drove during the camera's latency
    window; it only matters when ``cam.lag_frames`` is non-zero.
    """
    truth = Vec2(*truth)
    if truth.x <= 0 or abs(math.atan2(truth.y, truth.x)) > cam.half_fov:
        return None
    if cam.dropout_prob > 0 and rng.random() < cam.dropout_prob:
        return None
    u, v = project_to_pixel(truth, cam)
    if cam.pixel_jitter > 0:
        du, dv = rng.normal(0.0, cam.pixel_jitter, size=2)
        u, v = u + du, v + dv
    if cam.lag_frames and ego_shift:
        v += cam.focal_px * cam.mount_height * ego_shift / cam.overcorrection_ref_range ** 2
    if cam.quantize:
        u, v = float(np.round(u)), float(np.round(v))
    if not (0.0 <= u <= cam.width and v <= cam.height):
        return None
    return pixel_to_ground(u, v, cam)


# -- scenario description ----------------------------------------------------

@dataclass
class EgoScript:
    """``stationary``, ``constant`` (speed along ``heading``) or ``waypoints``.

    Waypoints are ``(t, x, y)`` triples visited with piecewise-constant velocity.
    """

    kind: str = "stationary"
    speed: float = 0.0
    heading: float = 0.0
    start: Tuple[float, float] = (0.0, 0.0)
    waypoints: Sequence[Tuple[float, float, float]] = ()

    def __post_init__(self):
        if self.kind not in ("stationary", "constant", "waypoints"):
            raise ScenarioError(f"unknown ego script {self.kind!r}")
        if self.kind == "constant" and self.speed < 0:
            raise ScenarioError("ego speed must be >= 0")
        if self.kind == "waypoints":
            wp = np.asarray(self.waypoints, dtype=float)
            if wp.ndim != 2 or wp.shape[1] != 3 or len(wp) < 2 or np.any(np.diff(wp[:, 0]) <= 0):
                raise ScenarioError("waypoints need >= 2 (t, x, y) rows with increasing t")

    def states(self, t: np.ndarray):
        """Vectorised truth: ``(x, y, heading, speed)`` arrays at times ``t``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "stationary":
            z = np.zeros_like(t)
            return z + self.start[0], z + self.start[1], z + self.heading, z
        if self.kind == "constant":
            c, s = math.cos(self.heading), math.sin(self.heading)
            return (self.start[0] + c * self.speed * t, self.start[1] + s * self.speed * t,
                    np.full_like(t, self.heading), np.full_like(t, self.speed))
        wp = np.asarray(self.waypoints, dtype=float)
        x = np.interp(t, wp[:, 0], wp[:, 1])
        y = np.interp(t, wp[:, 0], wp[:, 2])
        seg = np.clip(np.searchsorted(wp[:, 0], t, side="right") - 1, 0, len(wp) - 2)
        dx = wp[seg + 1, 1] - wp[seg, 1]
        dy = wp[seg + 1, 2] - wp[seg, 2]
        dt = wp[seg + 1, 0] - wp[seg, 0]
        speed = np.hypot(dx, dy) / dt
        moving = speed > 0
        first_dir = np.flatnonzero(np.hypot(np.diff(wp[:, 1]), np.diff(wp[:, 2])) > 0)
        h0 = (math.atan2(wp[first_dir[0] + 1, 2] - wp[first_dir[0], 2],
                         wp[first_dir[0] + 1, 1] - wp[first_dir[0], 1])
              if first_dir.size else self.heading)
        heading = np.where(moving, np.arctan2(dy, dx), h0)
        after = t > wp[-1, 0]
        speed = np.where(after, 0.0, speed)
        return x, y, heading, speed

    @property
    def initial_heading(self) -> float:
        return float(self.states(np.array([0.0]))[2][0])


@dataclass
class Actor:
    cls: ObjectClass
    start: Tuple[float, float]
    velocity: Tuple[float, float]
    t_start: float = 0.0
    t_stop: Optional[float] = None

    def __post_init__(self):
        self.cls = ObjectClass(self.cls)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)

    def position(self, t: float) -> Optional[Vec2]:
        if t < self.t_start or (self.t_stop is not None and t > self.t_stop):
            return None
        dt = t - self.t_start
        return Vec2(self.start[0] + self.velocity[0] * dt, self.start[1] + self.velocity[1] * dt)


@dataclass
class Scenario:
    ego: EgoScript
    actors: List[Actor]
    camera: CameraModel = field(default_factory=CameraModel)
    duration: float = 10.0
    seed: int = 0
    sensor_noise: EgoNoise = field(default_factory=EgoNoise)
    name: str = "custom"

    def validate(self) -> None:
        if not self.duration > 0:
            raise ScenarioError(f"duration must be > 0, got {self.duration}")
        for i, a in enumerate(self.actors):
            if a.cls is ObjectClass.PEDESTRIAN and a.speed > PED_MAX_SPEED:
                raise ScenarioError(f"actor {i + 1}: pedestrian speed {a.speed:.2f} m/s exceeds "
                                    f"{PED_MAX_SPEED} m/s")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ego"]["start"] = list(self.ego.start)
        d["ego"]["waypoints"] = [list(w) for w in self.ego.waypoints]
        d["actors"] = [dict(asdict(a), cls=a.cls.value, start=list(a.start),
                            velocity=list(a.velocity)) for a in self.actors]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        ego = dict(d.get("ego", {}))
        ego["start"] = tuple(ego.get("start", (0.0, 0.0)))
        ego["waypoints"] = tuple(tuple(w) for w in ego.get("waypoints", ()))
        actors = [Actor(a["cls"], tuple(a["start"]), tuple(a["velocity"]), a.get("t_start", 0.0),
                        a.get("t_stop")) for a in d.get("actors", [])]
        return cls(EgoScript(**ego), actors, CameraModel(**d.get("camera", {})),
                   float(d.get("duration", 10.0)), int(d.get("seed", 0)),
                   EgoNoise(**d.get("sensor_noise", {})), d.get("name", "custom"))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


@dataclass
class ScenarioLogs:
    detections: List[Detection]
    truth: List[dict]
    ego: List[EgoRecord]


# -- generation --------------------------------------------------------------

def _frame_times(duration: float, rate: float) -> np.ndarray:
    return np.arange(int(math.floor(duration * rate + 1e-9)) + 1) / rate


def generate(scn: Scenario, ego_sensors: bool = True) -> ScenarioLogs:
    """Deterministically synthesise all logs for ``scn`` from ``scn.seed``."""
    scn.validate()
    cam_ss, sens_ss = np.random.SeedSequence(scn.seed).spawn(2)
    cam_rng = np.random.default_rng(cam_ss)
    cam = scn.camera

    times = _frame_times(scn.duration, cam.rate)
    ex, ey, eh, _ = scn.ego.states(times)
    lag_t = np.maximum(times - cam.lag_frames / cam.rate, 0.0)
    lx, ly, _, _ = scn.ego.states(lag_t)
    shift = np.hypot(ex - lx, ey - ly)

    detections: List[Detection] = []
    truth: List[dict] = []
    switches = [0] * len(scn.actors)
    was_dropped = [False] * len(scn.actors)
    for k, t in enumerate(times):
        t = float(t)
        truth.append({"t": t, "id": 0, "x": float(ex[k]), "y": float(ey[k])})
        c, s = math.cos(eh[k]), math.sin(eh[k])
        for i, actor in enumerate(scn.actors):
            pw = actor.position(t)
            if pw is None:
                continue
            truth.append({"t": t, "id": i + 1, "x": pw.x, "y": pw.y})
            dx, dy = pw.x - ex[k], pw.y - ey[k]
            pv = Vec2(c * dx + s * dy, -s * dx + c * dy)
            in_view = pv.x > 0 and abs(math.atan2(pv.y, pv.x)) <= cam.half_fov
            obs = camera_observe(pv, cam, cam_rng, float(shift[k])) if in_view else None
            if obs is None:
                was_dropped[i] = was_dropped[i] or in_view
                continue
            if was_dropped[i] and cam.id_switch_prob > 0 and cam_rng.random() < cam.id_switch_prob:
                switches[i] += 1
            was_dropped[i] = False
            detections.append(Detection(t, (i + 1) * ID_STRIDE + switches[i], actor.cls, obs))

    ego = synthesize_ego_log(scn, np.random.default_rng(sens_ss)) if ego_sensors else []
    return ScenarioLogs(detections, truth, ego)


def synthesize_ego_log(scn: Scenario, rng: np.random.Generator) -> List[EgoRecord]:
    """IMU and wheel samples at ``imu_rate`` plus GPS fixes at ``gps_rate``."""
    nz = scn.sensor_noise
    dt = 1.0 / nz.imu_rate
    t = _frame_times(scn.duration, nz.imu_rate)
    t_next = np.append(t[1:], t[-1] + dt)
    x, y, h, v = scn.ego.states(t)
    _, _, h1, v1 = scn.ego.states(t_next)
    yaw_rate = np.remainder(h1 - h + np.pi, 2 * np.pi) - np.pi
    yaw_rate /= dt
    accel = (v1 - v) / dt
    n = len(t)
    gyro = np.column_stack([np.zeros(n), np.zeros(n), yaw_rate]) + rng.normal(0, nz.gyro, (n, 3))
    acc = np.column_stack([accel, v * yaw_rate, np.full(n, GRAVITY)]) + rng.normal(0, nz.accel, (n, 3))
    wheel = np.where(v > 0, np.maximum(v + rng.normal(0, nz.wheel, n), 0.0), 0.0)

    gps_every = max(int(round(nz.imu_rate / nz.gps_rate)), 1)
    gps_idx = np.arange(0, n, gps_every)
    gps_xy = np.column_stack([x[gps_idx], y[gps_idx]]) + rng.normal(0, nz.gps, (len(gps_idx), 2))
    sigma_gps = max(nz.gps, 1e-3)

    out: List[EgoRecord] = []
    g = 0
    for k in range(n):
        tk = float(t[k])
        out.append(ImuSample(tk, tuple(map(float, gyro[k])), tuple(map(float, acc[k]))))
        out.append(WheelSample(tk, float(wheel[k])))
        if g < len(gps_idx) and gps_idx[g] == k:
            out.append(GpsFix(tk, Vec2(float(gps_xy[g, 0]), float(gps_xy[g, 1])), sigma_gps))
            g += 1
    return out


# -- presets -----------------------------------------------------------------

def crossing(x_ped: float, ego_speed: float = 0.0, camera: Optional[CameraModel] = None,
             ped_speed: float = 1.4, y_start: Optional[float] = None,
             duration: Optional[float] = None, seed: int = 0, name: str = "crossing",
             cls: ObjectClass = ObjectClass.PEDESTRIAN) -> Scenario:
    """A road user crossing in +y at ``x = x_ped`` in front of the ego.

    With a stationary ego the walk starts just outside the field of view so
    the whole FOV is traversed; with a moving ego it starts inside the FOV.
    """
    camera = camera or CameraModel()
    if y_start is None:
        if ego_speed > 0:
            y_start = -0.2 * x_ped
        else:
            y_start = -(x_ped * math.tan(camera.half_fov) + 1.0)
    if duration is None:
        if ego_speed > 0:
            duration = x_ped / ego_speed + 1.0
        else:
            duration = 2.0 * abs(y_start) / ped_speed + 0.5
    ego = (EgoScript("constant", speed=ego_speed) if ego_speed > 0 else EgoScript("stationary"))
    actor = Actor(cls, (x_ped, y_start), (0.0, ped_speed))
    return Scenario(ego, [actor], camera, duration, seed, EgoNoise(), name)


def preset(name: str, seed: int = 0) -> Scenario:
    """Named scenario presets; see :data:`PRESETS`."""
    try:
        builder = PRESETS[name][1]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return builder(seed)


PRESETS: Dict[str, Tuple[str, callable]] = {
    "fig5": ("stationary ego, pedestrian crossing +y at x=20 m",
             lambda seed: crossing(20.0, seed=seed, name="fig5")),
    "fig6": ("stationary ego, pedestrian crossing +y at x=40 m",
             lambda seed: crossing(40.0, seed=seed, name="fig6")),
    "fig7": ("ego at 15 mph, pedestrian crossing +y at x=20 m (motion compensated)",
             lambda seed: crossing(20.0, 15 * MPH, seed=seed, name="fig7")),
    "fig8": ("ego at 15 mph, pedestrian crossing +y at x=40 m with dropouts and ID switches",
             lambda seed: crossing(40.0, 15 * MPH, CameraModel(dropout_prob=0.05, id_switch_prob=0.5),
                                   seed=seed, name="fig8")),
    "conflict": ("ego at 15 mph, pedestrian entering the ego path at x=40 m just before the ego",
                 lambda seed: crossing(40.0, 15 * MPH, y_start=-8.5, duration=7.0, seed=seed,
                                       name="conflict")),
}
