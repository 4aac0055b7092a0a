"""Time the compiled kernels against the numpy/heapq fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--json out.json]

Covers field rasterization on a 200x200 grid, batched field evaluation,
A* on a 200x200 cost grid, and full costmap composition.  Each timing is
the median over ``--repeat`` calls after one warm-up call.
"""

import argparse
import importlib
import json
import math
import os
import statistics
import sys
import time

import numpy as np

from socialnav import _fallback
from socialnav.costmap import LayerStack, compose, rasterize_static, scene_entities, support_radius
from socialnav.field import PersonState, Pose2D, SceneState, build_group

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "socialnav", "data")


def median_ms(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return 1000.0 * statistics.median(times)


def make_scene(seed=3):
    rng = np.random.default_rng(seed)
    persons = [PersonState(f"p{k}", Pose2D(float(rng.uniform(1.5, 8.5)), float(rng.uniform(1.5, 8.5)),
                                           float(rng.uniform(-math.pi, math.pi))))
               for k in range(8)]
    return SceneState(tuple(persons), (build_group("g1", persons[:3]), build_group("g2", persons[3:5])))


def run(backend, repeat, scene, static):
    ent = np.ascontiguousarray(scene_entities(scene))
    sup = np.array([support_radius(e[3], e[4:8].max(), 0.05) for e in ent])
    grid = np.zeros((200, 200), dtype=np.uint8)
    rng = np.random.default_rng(0)
    xs = rng.uniform(0, 10, 20_000)
    ys = rng.uniform(0, 10, 20_000)
    costs = rng.integers(0, 200, (200, 200)).astype(np.uint8)
    costs[rng.random((200, 200)) < 0.15] = 254
    costs[0, 0] = costs[199, 199] = 0
    return {
        "rasterize_max 200x200, 10 entities": median_ms(
            lambda: backend.rasterize_max(grid.copy(), 0.0, 0.0, 0.05, ent, sup), repeat),
        "field_values 20k points": median_ms(lambda: backend.field_values(xs, ys, ent), repeat),
        "astar 200x200": median_ms(lambda: backend.astar(costs, 0, 0, 199, 199, 0.02, 253), max(3, repeat // 4)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--json", help="also write the timings to this file")
    args = parser.parse_args(argv)

    scene = make_scene()
    static = rasterize_static(os.path.join(DATA, "room.yaml"))
    backends = {"python": _fallback}
    try:
        backends["cython"] = importlib.import_module("socialnav._kernels")
    except ImportError:
        print("compiled extension not built; timing the fallback only", file=sys.stderr)

    results = {name: run(mod, args.repeat, scene, static) for name, mod in backends.items()}

    # Full composition goes through socialnav.kernels, so time it per backend
    # by swapping the dispatch target.
    from socialnav import kernels
    stack = LayerStack(static.spec, static, [p.pose.xy for p in scene.persons])
    for name, mod in backends.items():
        saved = kernels.rasterize_max
        kernels.rasterize_max = mod.rasterize_max
        try:
            results[name]["compose 200x200, 8 persons, 2 groups"] = median_ms(lambda: compose(stack, scene),
                                                                              args.repeat)
        finally:
            kernels.rasterize_max = saved

    names = list(results["python"])
    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
    if "cython" in backends:
        header += f"  {'speedup':>8}"
    print(header)
    for n in names:
        row = f"{n:<{width}}  " + "  ".join(f"{results[b][n]:>8.2f}ms" for b in backends)
        if "cython" in backends:
            row += f"  {results['python'][n] / results['cython'][n]:>7.1f}x"
        print(row)
    if args.json:
        with open(args.json, "w") as f:
            json.dump(results, f, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
