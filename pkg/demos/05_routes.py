"""
Routes: providers, projection and rerouting
===========================================

A file-backed L-shaped route with one maneuver, projection of the ego
onto it, and a reroute once the ego wanders off.
"""

import json
import tempfile
from pathlib import Path

from pedwarn.core import Pose2, Vec2
from pedwarn.route import (FileProvider, RouteManager, StraightLineProvider, check_deviation,
                           pending_maneuver, project, provide_route)

route_json = {"polyline": [[0, 0], [50, 0], [50, 30]], "maneuvers": [{"s": 50, "text": "turn left"}]}
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "route.json"
    path.write_text(json.dumps(route_json))
    route = provide_route(Pose2(Vec2(0, 0), 0.0), Vec2(50, 30), FileProvider(path))
print(f"route length {route.length} m, vertex arc lengths {route.arc_lengths.tolist()}")

for x, y, speed in [(10, 1, 8.0), (38, -0.5, 8.0), (52, 10, 8.0)]:
    fix = project(Pose2(Vec2(x, y), 0.0), route)
    m = pending_maneuver(route, fix, speed)
    print(f"ego at ({x}, {y}): s={fix.s:5.1f} m, cross-track {fix.cross_track:+.1f} m, "
          f"{check_deviation(fix).value}, pending maneuver: {m.text if m else '-'}")

mgr = RouteManager(StraightLineProvider(), (200.0, 0.0))
mgr.update(Pose2(Vec2(0, 0), 0.0))
mgr.update(Pose2(Vec2(30, 25), 0.0))
print(f"\nstraight-line route after a 25 m detour: {mgr.reroutes} reroute, "
      f"new start {mgr.route.polyline[0].tolist()}")
