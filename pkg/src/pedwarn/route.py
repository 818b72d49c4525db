"""Most-probable-path handling: providers, projection and rerouting.

Route JSON (file provider, HTTP provider response)::

    {"polyline": [[x, y], ...], "maneuvers": [{"s": metres, "text": "turn right"}]}
"""

from __future__ import annotations

import enum
import json
import math
import os
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import Pose2, Vec2, normalize_angle

ROUTE_URL_ENV = "PEDWARN_ROUTE_URL"


class RouteError(ValueError):
    pass


class ProviderUnreachable(RouteError):
    pass


@dataclass(frozen=True)
class Maneuver:
    s: float
    text: str


@dataclass(frozen=True)
class RoutePath:
    polyline: np.ndarray = field(compare=False)
    maneuvers: Tuple[Maneuver, ...] = ()

    def __post_init__(self):
        pts = np.array(self.polyline, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise RouteError("a route needs at least two 2-D vertices")
        if not np.all(np.isfinite(pts)):
            raise RouteError("non-finite route vertex")
        seg = np.diff(pts, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(lengths <= 0):
            raise RouteError("route contains a zero-length segment")
        pts.setflags(write=False)
        arc = np.concatenate([[0.0], np.cumsum(lengths)])
        arc.setflags(write=False)
        object.__setattr__(self, "polyline", pts)
        object.__setattr__(self, "arc_lengths", arc)
        object.__setattr__(self, "maneuvers",
                           tuple(m if isinstance(m, Maneuver) else Maneuver(float(m["s"]), m["text"])
                                 for m in self.maneuvers))

    def __eq__(self, other):
        if not isinstance(other, RoutePath):
            return NotImplemented
        return np.array_equal(self.polyline, other.polyline) and self.maneuvers == other.maneuvers

    @property
    def length(self) -> float:
        return float(self.arc_lengths[-1])

    def point_at(self, s: float) -> Vec2:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.arc_lengths, s, side="right") - 1)
        i = min(i, len(self.polyline) - 2)
        a, b = self.polyline[i], self.polyline[i + 1]
        u = (s - self.arc_lengths[i]) / (self.arc_lengths[i + 1] - self.arc_lengths[i])
        p = a + u * (b - a)
        return Vec2(float(p[0]), float(p[1]))

    def to_dict(self) -> dict:
        return {"polyline": self.polyline.tolist(),
                "maneuvers": [{"s": m.s, "text": m.text} for m in self.maneuvers]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RoutePath":
        try:
            poly = d["polyline"]
        except (KeyError, TypeError) as exc:
            raise RouteError("route JSON lacks a 'polyline' field") from exc
        return cls(np.asarray(poly, dtype=float), tuple(d.get("maneuvers", ())))


@dataclass(frozen=True)
class RouteFix:
    s: float
    cross_track: float   # + left of the direction of travel
    heading_error: float
    segment: int = 0


class RouteStatus(str, enum.Enum):
    ON_ROUTE = "on_route"
    DEVIATED = "deviated"


@dataclass
class RouteConfig:
    provider: str = "line"             # line | file | http
    destination: Tuple[float, float] = (300.0, 0.0)
    file: Optional[str] = None
    url: Optional[str] = None
    max_cross_track: float = 20.0      # m
    max_heading_error_deg: float = 45.0
    speed_floor: float = 0.5           # m/s; slower egos are treated as not approaching


# -- providers ---------------------------------------------------------------

class StraightLineProvider:
    """Route straight from the start position to the destination."""

    def route(self, start: Pose2, dest: Vec2) -> RoutePath:
        return RoutePath(np.array([[start.position.x, start.position.y], [dest[0], dest[1]]]))


class FileProvider:
    """Route read from a JSON file; start and destination are ignored."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def route(self, start: Pose2, dest: Vec2) -> RoutePath:
        with open(self.path) as fh:
            return RoutePath.from_dict(json.load(fh))


class HttpProvider:
    """Route fetched with ``GET <url>?start=x,y&dest=x,y``."""

    def __init__(self, url: Optional[str] = None, timeout: float = 5.0):
        self.url = url or os.environ.get(ROUTE_URL_ENV)
        if not self.url:
            raise RouteError(f"no route URL given and ${ROUTE_URL_ENV} is unset")
        self.timeout = timeout

    def route(self, start: Pose2, dest: Vec2) -> RoutePath:
        query = urllib.parse.urlencode({
            "start": f"{start.position.x!r},{start.position.y!r}",
            "dest": f"{float(dest[0])!r},{float(dest[1])!r}",
        })
        sep = "&" if "?" in self.url else "?"
        try:
            with urllib.request.urlopen(f"{self.url}{sep}{query}", timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError) as exc:
            raise ProviderUnreachable(f"route provider at {self.url} unreachable: {exc}") from exc
        return RoutePath.from_dict(payload)


def make_provider(config: RouteConfig):
    if config.provider == "line":
        return StraightLineProvider()
    if config.provider == "file":
        if not config.file:
            raise RouteError("file provider selected but no route file configured")
        return FileProvider(config.file)
    if config.provider == "http":
        return HttpProvider(config.url)
    raise RouteError(f"unknown route provider {config.provider!r}")


def provide_route(start: Pose2, dest: Vec2, provider) -> RoutePath:
    if math.hypot(start.position.x - dest[0], start.position.y - dest[1]) == 0.0:
        raise RouteError("degenerate route request: start equals destination")
    return provider.route(start, Vec2(float(dest[0]), float(dest[1])))


# -- geometry ----------------------------------------------------------------

def project_points(points: np.ndarray, route: RoutePath):
    """Nearest-point projection of ``(n, 2)`` points onto the polyline.

    Returns ``(s, cross_track, distance, segment)`` arrays. Ties go to the
    earlier segment, i.e. the smaller arc length.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = route.polyline[:-1]
    d = route.polyline[1:] - a
    seg_len = np.diff(route.arc_lengths)
    rel = pts[:, None, :] - a[None, :, :]
    u = np.clip(np.einsum("nkj,kj->nk", rel, d) / seg_len ** 2, 0.0, 1.0)
    foot = a[None] + u[..., None] * d[None]
    off = pts[:, None, :] - foot
    dist = np.hypot(off[..., 0], off[..., 1])
    k = np.argmin(dist, axis=1)
    rows = np.arange(len(pts))
    s = route.arc_lengths[k] + u[rows, k] * seg_len[k]
    cross = (d[k, 0] * off[rows, k, 1] - d[k, 1] * off[rows, k, 0]) / seg_len[k]
    return s, cross, dist[rows, k], k


def project(ego, route: RoutePath) -> RouteFix:
    """Project the ego pose (a ``Pose2`` or anything with ``.pose``) onto the route."""
    pose = getattr(ego, "pose", ego)
    s, cross, _, k = project_points(np.array([pose.position]), route)
    seg = route.polyline[k[0] + 1] - route.polyline[k[0]]
    heading_err = normalize_angle(pose.heading - math.atan2(seg[1], seg[0]))
    return RouteFix(float(s[0]), float(cross[0]), heading_err, int(k[0]))


def check_deviation(fix: RouteFix, config: RouteConfig = RouteConfig()) -> RouteStatus:
    if (abs(fix.cross_track) > config.max_cross_track
            or abs(fix.heading_error) > math.radians(config.max_heading_error_deg)):
        return RouteStatus.DEVIATED
    return RouteStatus.ON_ROUTE


def time_to_arc(ds: float, speed: float, floor: float = 0.5) -> Optional[float]:
    """Seconds for the ego to cover ``ds`` metres at constant ``speed``.

    None when the ego is below the speed floor (not approaching).
    """
    if speed < floor:
        return None
    return ds / speed


def pending_maneuver(route: RoutePath, fix: RouteFix, speed: float, window: float = 2.0,
                     floor: float = 0.5) -> Optional[Maneuver]:
    """First maneuver ahead of the ego that is due within ``window`` seconds."""
    for m in route.maneuvers:
        if m.s < fix.s:
            continue
        t = time_to_arc(m.s - fix.s, speed, floor)
        if t is not None and t <= window:
            return m
        break
    return None


class RouteManager:
    """Keeps the active route and requests a new one when the ego deviates."""

    def __init__(self, provider, destination: Sequence[float], config: RouteConfig = RouteConfig(),
                 route: Optional[RoutePath] = None):
        self.provider = provider
        self.destination = Vec2(float(destination[0]), float(destination[1]))
        self.config = config
        self.route = route
        self.reroutes = 0

    def update(self, ego) -> RouteFix:
        pose = getattr(ego, "pose", ego)
        if self.route is None:
            self.route = provide_route(pose, self.destination, self.provider)
        fix = project(pose, self.route)
        if check_deviation(fix, self.config) is RouteStatus.DEVIATED and self.provider is not None:
            self.route = provide_route(pose, self.destination, self.provider)
            self.reroutes += 1
            fix = project(pose, self.route)
        return fix
