"""Command-line entry points.

    socialnav field    --scene S.json --out DIR
    socialnav costmap  --scene S.json [--map M.yaml] --out DIR
    socialnav approach --scene S.json --target ID --robot X Y THETA [--model adapted|baseline]
    socialnav sim      --scenario FILE|DIR|@bundled ... --out DIR
    socialnav dataset  --dataset FILE.csv|@bundled|@synthetic --out DIR

Exit codes: 0 success, 1 input error, 2 no valid result.  Every command
writes its outputs plus ``manifest.json`` into the ``--out`` directory.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import glob
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__, kernels
from .adaptation import adapt_scene
from .config import ConfigError, RunConfig, load_config
from .approach import estimate_approach_pose
from .costmap import GridSpec, LayerStack, compose, rasterize_static, save_binary, save_csv, scene_entities
from .evaluation import compare_perimeters, load_dataset, local_grid, synthetic_dataset
from .field import Pose2D, load_scene
from .sim import load_scenario, run_scenario, write_summary

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_RESULT = 2

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


class InputError(Exception):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command: str, args: argparse.Namespace, cfg: RunConfig, outputs: list[str],
                    extra: dict | None = None):
    doc = {
        "command": command,
        "version": __version__,
        "backend": kernels.BACKEND,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "config": cfg.to_dict(),
        "outputs": [{"file": os.path.basename(p), "sha256": _sha256(p)} for p in outputs],
    }
    if extra:
        doc.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=str)


def _config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _out_dir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


# -- field / costmap -------------------------------------------------------

def field_grid(scene, spec: GridSpec) -> np.ndarray:
    """Global field sampled at the cell centers of ``spec`` (row = y)."""
    xs = spec.origin[0] + (np.arange(spec.width) + 0.5) * spec.resolution
    ys = spec.origin[1] + (np.arange(spec.height) + 0.5) * spec.resolution
    gx, gy = np.meshgrid(xs, ys)
    ent = np.ascontiguousarray(scene_entities(scene))
    vals = kernels.field_values(np.ascontiguousarray(gx.ravel()), np.ascontiguousarray(gy.ravel()), ent)
    return np.asarray(vals).reshape(spec.height, spec.width)


def _grid_from_args(args, cfg: RunConfig) -> GridSpec:
    if args.bounds is None:
        return cfg.grid if args.resolution is None else replace(cfg.grid, resolution=args.resolution)
    xmin, ymin, xmax, ymax = args.bounds
    res = args.resolution or cfg.grid.resolution
    if not (xmax > xmin and ymax > ymin):
        raise InputError("bounds must satisfy xmax > xmin and ymax > ymin")
    return GridSpec((xmin, ymin), res, math.ceil((xmax - xmin) / res), math.ceil((ymax - ymin) / res))


def cmd_field(args) -> int:
    cfg = _config(args)
    scene = load_scene(args.scene)
    spec = _grid_from_args(args, cfg)
    values = field_grid(scene, spec)
    out = _out_dir(args)
    path = os.path.join(out, "field.csv")
    np.savetxt(path, values, fmt="%.6f", delimiter=",")
    _write_manifest(out, "field", args, cfg, [path], {"grid": dataclasses.asdict(spec)})
    return EXIT_OK


def cmd_costmap(args) -> int:
    cfg = _config(args)
    scene = load_scene(args.scene)
    static = rasterize_static(args.map) if args.map else None
    spec = static.spec if static is not None else _grid_from_args(args, cfg)
    if args.adapt:
        scene = adapt_scene(scene, None, None, cfg.adaptation, cfg.velocity, velocity=False)
    stack = LayerStack(spec, static, [p.pose.xy for p in scene.persons], cfg.costmap.clearing_radius,
                       cfg.costmap.inscribed_radius, cfg.costmap.decay_rate)
    master = compose(stack, scene)
    out = _out_dir(args)
    paths = [os.path.join(out, "costmap.csv"), os.path.join(out, "costmap.bin")]
    save_csv(master, paths[0])
    save_binary(master, paths[1])
    _write_manifest(out, "costmap", args, cfg, paths, {"grid": dataclasses.asdict(spec)})
    return EXIT_OK


# -- approach ----------------------------------------------------------------

def cmd_approach(args) -> int:
    cfg = _config(args)
    settings = cfg.settings()
    scene = load_scene(args.scene)
    if args.target not in {p.id for p in scene.persons} | {g.id for g in scene.groups}:
        raise InputError(f"unknown target {args.target!r}")
    robot = Pose2D(*args.robot)
    if args.model == "adapted":
        scene = adapt_scene(scene, robot.xy, args.target, settings.adaptation, settings.velocity)
    spec = local_grid(scene, cfg.grid.resolution, margin=4.0)
    master = compose(LayerStack(spec, None, [p.pose.xy for p in scene.persons], cfg.costmap.clearing_radius,
                                cfg.costmap.inscribed_radius, cfg.costmap.decay_rate), scene)
    log: list = []
    pose = estimate_approach_pose(master, scene, args.target, robot, settings.approach,
                                  adaptive=not args.no_velocity_search, log=log)
    report = {"target": args.target, "model": args.model, "valid": pose is not None}
    if pose is not None:
        report.update({"x": pose.x, "y": pose.y, "heading": pose.heading, "radius_used": pose.radius_used,
                       "zone_id": pose.zone_id, "fov_fallback": pose.fov_fallback})
    print(json.dumps(report, sort_keys=True))
    if args.out:
        out = _out_dir(args)
        paths = [os.path.join(out, "approach.json"), os.path.join(out, "search_log.json")]
        with open(paths[0], "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
        with open(paths[1], "w") as f:
            json.dump(log, f, indent=1, sort_keys=True)
        _write_manifest(out, "approach", args, cfg, paths)
    return EXIT_OK if pose is not None else EXIT_NO_RESULT


# -- sim ---------------------------------------------------------------------

def _expand_scenarios(items: list[str]) -> list[str]:
    files = []
    for item in items:
        if item.startswith("@bundled"):
            rest = item[len("@bundled"):].lstrip("/")
            base = os.path.join(DATA_DIR, "scenarios")
            item = os.path.join(base, rest + ".json") if rest else base
        if os.path.isdir(item):
            files.extend(sorted(glob.glob(os.path.join(item, "*.json"))))
        elif os.path.isfile(item):
            files.append(item)
        else:
            raise InputError(f"scenario not found: {item}")
    return files


def _run_job(job):
    path, flags_index, settings, seed = job
    scenario = load_scenario(path)
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    return run_scenario(scenario, scenario.configs[flags_index], settings), scenario.target


def cmd_sim(args) -> int:
    cfg = _config(args)
    settings = cfg.settings()
    files = _expand_scenarios(args.scenario)
    jobs = []
    for path in files:
        scenario = load_scenario(path)
        for k in range(len(scenario.configs)):
            jobs.append((path, k, settings, args.seed))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    out = _out_dir(args)
    outputs, rows = [], []
    for trace, target in results:
        path = os.path.join(out, f"{trace.scenario}__{trace.config}.ndjson")
        trace.write_ndjson(path)
        outputs.append(path)
        rows.append(trace.summary(target))
    summary = os.path.join(out, "summary.csv")
    write_summary(summary, rows)
    outputs.append(summary)
    _write_manifest(out, "sim", args, cfg, outputs)
    for row in rows:
        print(f"{row['scenario']:<28} {row['config']:<12} {'goal' if row['success'] else 'no goal'}")
    return EXIT_OK if any(r["success"] for r in rows) or not rows else EXIT_NO_RESULT


# -- dataset -----------------------------------------------------------------

def _load_situations(args):
    if args.dataset == "@bundled":
        return load_dataset(os.path.join(DATA_DIR, "situations.csv"))
    if args.dataset == "@synthetic":
        return synthetic_dataset(args.groups, seed=args.seed or 0)
    if not os.path.isfile(args.dataset):
        raise InputError(f"dataset not found: {args.dataset}")
    return load_dataset(args.dataset)


def cmd_dataset(args) -> int:
    cfg = _config(args)
    settings = cfg.settings()
    situations = _load_situations(args)
    reports = compare_perimeters(situations, settings.approach, settings.adaptation,
                                 s_r_values=tuple(args.s_r), s_h_values=tuple(args.s_h),
                                 resolution=cfg.grid.resolution)
    out = _out_dir(args)
    groups_path = os.path.join(out, "perimeters.csv")
    with open(groups_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["s_r", "s_h", "situation_id", "group_id", "size", "baseline", "adapted", "params_changed"])
        for rep in reports:
            for g in rep.groups:
                w.writerow([rep.s_r, rep.s_h, g.situation_id, g.group_id, g.size, repr(g.baseline),
                            repr(g.adapted), int(g.params_changed)])
    report_path = os.path.join(out, "report.json")
    doc = []
    for rep in reports:
        adapted_situations = sorted({g.situation_id for g in rep.groups if g.params_changed})
        doc.append({"s_r": rep.s_r, "s_h": rep.s_h, "groups": len(rep.groups),
                    "total_baseline": rep.total_baseline, "total_adapted": rep.total_adapted,
                    "increase_pct": rep.increase_pct if math.isfinite(rep.increase_pct) else None,
                    "adapted_situations": adapted_situations,
                    "by_size": {str(k): {kk: (vv if not isinstance(vv, float) or math.isfinite(vv) else None)
                                         for kk, vv in v.items()} for k, v in rep.by_size().items()}})
    with open(report_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
    _write_manifest(out, "dataset", args, cfg, [groups_path, report_path],
                    {"situations": len(situations)})
    for d in doc:
        pct = "n/a" if d["increase_pct"] is None else f"{d['increase_pct']:.2f}%"
        print(f"s_r={d['s_r']:.3f} s_h={d['s_h']:.3f} groups={d['groups']} increase={pct} "
              f"adapted situations={len(d['adapted_situations'])}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socialnav", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("field", help="dump the global field of a scene on a grid")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "YMIN", "XMAX", "YMAX"))
    p.add_argument("--resolution", type=float)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("costmap", help="compose the layered costmap of a scene")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--map", help="static map YAML")
    p.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "YMIN", "XMAX", "YMAX"))
    p.add_argument("--resolution", type=float)
    p.add_argument("--adapt", action="store_true", help="apply the group arrangement adaptation first")
    p.set_defaults(func=cmd_costmap)

    p = sub.add_parser("approach", help="estimate an approach pose")
    common(p, out_required=False)
    p.add_argument("--scene", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--robot", type=float, nargs=3, metavar=("X", "Y", "THETA"), default=(0.0, 0.0, 0.0))
    p.add_argument("--model", choices=("adapted", "baseline"), default="adapted")
    p.add_argument("--no-velocity-search", action="store_true",
                   help="disable the velocity-aware search (step, limit, field of view)")
    p.set_defaults(func=cmd_approach)

    p = sub.add_parser("sim", help="run scenarios under their configurations")
    common(p)
    p.add_argument("--scenario", required=True, action="append",
                   help="scenario file, directory, @bundled or @bundled/NAME (repeatable)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("dataset", help="baseline versus adapted approach perimeter sweep")
    common(p)
    p.add_argument("--dataset", required=True, help="situations CSV, @bundled or @synthetic")
    p.add_argument("--groups", type=int, default=300, help="group count for @synthetic")
    p.add_argument("--s-r", type=float, nargs="+", default=[0.45, 0.8])
    p.add_argument("--s-h", type=float, nargs="+", default=[0.225, 0.3, 0.375, 0.45])
    p.set_defaults(func=cmd_dataset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
