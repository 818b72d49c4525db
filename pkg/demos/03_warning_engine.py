"""
From crossing pedestrian to spoken warning
==========================================

Replay the ``conflict`` preset (15 mph ego, pedestrian stepping into its
path 40 m ahead) through the whole engine and score the result.
"""

from pedwarn.config import RunConfig
from pedwarn.core import Pose2, Vec2
from pedwarn.pipeline import evaluate, run_pipeline
from pedwarn.route import StraightLineProvider, provide_route
from pedwarn.scenario import CameraModel, generate, preset

for label, camera in [("noiseless camera", CameraModel.noiseless()),
                      ("jitter + quantisation", CameraModel(lag_frames=0)),
                      ("jitter + quantisation + latency bias", CameraModel())]:
    scn = preset("conflict", seed=4)
    scn.camera = camera
    logs = generate(scn)
    cfg = RunConfig(seed=4, camera=camera)
    route = provide_route(Pose2(Vec2(0, 0), 0.0), cfg.route.destination, StraightLineProvider())
    result = run_pipeline(cfg, logs.detections, logs.ego, route, StraightLineProvider())
    report = evaluate(result.warning_records(), logs.truth, cfg, route)
    print(f"-- {label}")
    for w in result.warnings:
        print(f"   t={w.t_issued:5.2f} s  {w.severity.value:9s} t_veh={w.conflict.t_veh:4.2f} s "
              f"s={w.conflict.s_intercept:5.1f} m  \"{w.utterance}\"")
    lead = "n/a" if report.lead_time is None else f"{report.lead_time:.2f} s"
    print(f"   lead time {lead}, false warnings {report.false_warnings}, "
          f"missed {report.missed_conflicts}")
