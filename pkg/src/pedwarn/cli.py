"""Command line entry point: ``pedwarn {simulate,run,eval,plot,preset}``.

A run directory holds the logs of one scenario::

    scenario.json  config.json  detections.jsonl  ego.jsonl  truth.jsonl
    route.json  warnings.jsonl  tracks.jsonl  eval.json  *.svg
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

from . import logs as logio
from .config import ConfigError, RunConfig
from .core import Pose2, Vec2
from .ego_state import bootstrap_state
from .pipeline import EvalReport, aggregate, evaluate, run_pipeline
from .plotting import emit_plot
from .route import ROUTE_URL_ENV, RoutePath, make_provider, provide_route
from .scenario import PRESETS, Scenario, generate, preset

log = logging.getLogger("pedwarn")


def apply_sets(cfg: RunConfig, items, prefix: str = "") -> None:
    """Apply ``KEY=VALUE`` overrides (values parsed as JSON when possible)."""
    for item in items or ():
        key, _, raw = item.partition("=")
        if not key.startswith(prefix):
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg.override(key, value)


def load_config(args) -> RunConfig:
    path = args.config
    if path is None and getattr(args, "out_dir", None):
        candidate = Path(args.out_dir) / "config.json"
        if candidate.exists():
            path = candidate
    cfg = RunConfig.load(path) if path else RunConfig()
    apply_sets(cfg, args.set)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "route_provider", None):
        cfg.route.provider = args.route_provider
    if getattr(args, "route_url", None):
        cfg.route.url = args.route_url
    if getattr(args, "route_file", None):
        cfg.route.file = args.route_file
    return cfg


def load_scenario(name_or_path: str, seed: int, camera_sets=()) -> Scenario:
    """Preset or scenario file; ``camera.*`` overrides patch its camera."""
    if name_or_path in PRESETS:
        scn = preset(name_or_path, seed)
    else:
        with open(name_or_path) as fh:
            scn = Scenario.from_dict(json.load(fh)).with_seed(seed)
    if camera_sets:
        patch = RunConfig(camera=scn.camera)
        apply_sets(patch, camera_sets, "camera.")
        scn.camera = patch.camera
    return scn


def simulate_to(out: Path, scn: Scenario, cfg: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    sim = generate(scn)
    cfg.initial_heading = scn.ego.initial_heading
    cfg.camera = scn.camera
    cfg.seed = scn.seed
    (out / "scenario.json").write_text(json.dumps(scn.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(cfg.to_json() + "\n")
    logio.write_jsonl(out / "detections.jsonl", (d.to_dict() for d in sim.detections))
    logio.write_jsonl(out / "ego.jsonl", (r.to_dict() for r in sim.ego))
    logio.write_jsonl(out / "truth.jsonl", sim.truth)


def route_for(cfg: RunConfig, ego_log) -> RoutePath:
    start = bootstrap_state(ego_log, cfg.initial_heading).pose if ego_log else \
        Pose2(Vec2(0.0, 0.0), cfg.initial_heading)
    return provide_route(start, cfg.route.destination, make_provider(cfg.route))


def run_dir(out: Path, cfg: RunConfig) -> None:
    dets = logio.read_detections(out / "detections.jsonl")
    ego_path = out / "ego.jsonl"
    ego = logio.read_ego(ego_path) if ego_path.exists() else []
    provider = make_provider(cfg.route)
    route = route_for(cfg, ego)
    res = run_pipeline(cfg, dets, ego, route, provider)
    (out / "route.json").write_text(route.to_json() + "\n")
    logio.write_jsonl(out / "warnings.jsonl", res.warning_records())
    logio.write_jsonl(out / "tracks.jsonl", res.tracks)


def _one_seed(job):
    scenario, seed, cfg_dict, sets = job
    cfg = RunConfig.from_dict(cfg_dict)
    scn = load_scenario(scenario, seed, sets)
    sim = generate(scn)
    cfg.initial_heading = scn.ego.initial_heading
    cfg.camera = scn.camera
    route = route_for(cfg, sim.ego)
    res = run_pipeline(cfg, sim.detections, sim.ego, route, make_provider(cfg.route))
    return evaluate(res.warning_records(), sim.truth, cfg, route, scn.name, seed).to_dict()


# -- subcommands -------------------------------------------------------------

def cmd_preset(args) -> int:
    for name, (desc, _) in PRESETS.items():
        print(f"{name:9s} {desc}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    scn = load_scenario(args.scenario, cfg.seed, args.set or ())
    simulate_to(Path(args.out_dir), scn, cfg)
    return 0


def cmd_run(args) -> int:
    run_dir(Path(args.out_dir), load_config(args))
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args)
    if args.seeds:
        if not args.scenario:
            raise ConfigError("--seeds needs --scenario")
        jobs = [(args.scenario, cfg.seed + i, cfg.to_dict(), args.set or ())
                for i in range(args.seeds)]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                reports = list(pool.map(_one_seed, jobs))
        else:
            reports = [_one_seed(j) for j in jobs]
        summary = {"aggregate": aggregate([EvalReport(**r) for r in reports]), "runs": reports}
    else:
        out = Path(args.out_dir)
        warnings = logio.read_jsonl(out / "warnings.jsonl")
        truth = logio.read_jsonl(out / "truth.jsonl")
        route = RoutePath.from_dict(json.loads((out / "route.json").read_text()))
        summary = evaluate(warnings, truth, cfg, route, seed=cfg.seed).to_dict()
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(args.out_dir) / "eval.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_plot(args) -> int:
    out = Path(args.out_dir)
    logs = {}
    for name in ("tracks", "detections", "warnings"):
        p = out / f"{name}.jsonl"
        logs[name] = logio.read_jsonl(p) if p.exists() else []
    target = Path(args.output) if args.output else out / f"{args.kind}.svg"
    emit_plot(logs, args.kind, target)
    print(target)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file")
    common.add_argument("--seed", type=int, help="seed for all randomness")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field, e.g. conflict.t_warn=3.5")
    common.add_argument("--out-dir", default=None, help="run directory")
    common.add_argument("--scenario", help="preset name or scenario JSON file")
    common.add_argument("--route-provider", choices=("line", "file", "http"))
    common.add_argument("--route-url", help=f"HTTP route provider URL (default ${ROUTE_URL_ENV})")
    common.add_argument("--route-file", help="route JSON for the file provider")

    p = argparse.ArgumentParser(prog="pedwarn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("preset", parents=[common], help="list scenario presets").set_defaults(fn=cmd_preset)
    sp = sub.add_parser("simulate", parents=[common], help="generate scenario logs")
    sp.set_defaults(fn=cmd_simulate)
    sp = sub.add_parser("run", parents=[common], help="replay logs through the warning engine")
    sp.set_defaults(fn=cmd_run)
    sp = sub.add_parser("eval", parents=[common], help="score warnings against ground truth")
    sp.add_argument("--seeds", type=int, default=0, help="simulate+run+score this many seeds")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_eval)
    sp = sub.add_parser("plot", parents=[common], help="emit an SVG figure")
    sp.add_argument("--kind", choices=("trajectory", "timeline"), default="trajectory")
    sp.add_argument("--output", help="SVG path (default <out-dir>/<kind>.svg)")
    sp.set_defaults(fn=cmd_plot)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("simulate", "run", "plot") and not args.out_dir:
        parser.error(f"{args.command} needs --out-dir")
    if args.command == "simulate" and not args.scenario:
        parser.error("simulate needs --scenario")
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"pedwarn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
