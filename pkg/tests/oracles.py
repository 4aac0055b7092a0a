"""Independent reference implementations used as test oracles.

Everything here is written with plain loops (or scipy's graph routines)
and shares no code with the package's kernels.
"""

import math

import numpy as np
from scipy.sparse import lil_matrix
from scipy.sparse.csgraph import dijkstra

from socialnav.costmap import INSCRIBED, LETHAL, UNKNOWN, GridSpec
from socialnav.field import GaussianParams, PersonState, Pose2D, SceneState, altered_asymmetric_gaussian, build_group


def brute_master(spec, static_cells, obstacle_points, scene, clearing, inscribed, decay):
    """Per-cell recomputation of the layer stack with plain loops."""
    h, w = spec.height, spec.width
    res = spec.resolution
    centers = [[(spec.origin[0] + (j + 0.5) * res, spec.origin[1] + (i + 0.5) * res) for j in range(w)]
               for i in range(h)]
    grid = [[int(static_cells[i][j]) for j in range(w)] for i in range(h)]
    # obstacles, minus cells close to a person
    for x, y in obstacle_points:
        j = math.floor((x - spec.origin[0]) / res)
        i = math.floor((y - spec.origin[1]) / res)
        if not (0 <= i < h and 0 <= j < w):
            continue
        cx, cy = centers[i][j]
        if any((cx - p.pose.x) ** 2 + (cy - p.pose.y) ** 2 <= clearing ** 2 for p in scene.persons):
            continue
        grid[i][j] = LETHAL
    lethal = [(i, j) for i in range(h) for j in range(w) if grid[i][j] == LETHAL]
    out = [row[:] for row in grid]
    if lethal:
        for i in range(h):
            for j in range(w):
                if grid[i][j] == UNKNOWN:
                    continue
                d = min(math.hypot(i - a, j - b) for a, b in lethal) * res
                v = INSCRIBED if d <= inscribed else math.floor(252 * math.exp(-decay * (d - inscribed)) + 0.5)
                out[i][j] = max(out[i][j], v)
    ents = [(p.pose, p.params) for p in scene.persons] + [(g.pose, g.params) for g in scene.groups]
    for i in range(h):
        for j in range(w):
            if out[i][j] == UNKNOWN or not ents:
                continue
            x, y = centers[i][j]
            v = max(altered_asymmetric_gaussian(x, y, pose, prm) for pose, prm in ents)
            out[i][j] = max(out[i][j], math.floor(v + 0.5))
    return np.array(out, dtype=np.uint8)


def compose_fixture(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec((-1.0, -2.0), 0.05, 100, 100)
    static = np.zeros((100, 100), dtype=np.uint8)
    static[0, :] = LETHAL
    static[:, 99] = LETHAL
    static[60:70, 10:20] = UNKNOWN
    persons = [PersonState(f"p{k}", Pose2D(float(rng.uniform(0, 3.5)), float(rng.uniform(-1.5, 2.5)),
                                           float(rng.uniform(-3, 3))),
                           params=GaussianParams(211, float(rng.uniform(0.5, 1.5)), 0.5, 0.4, 0.35))
               for k in range(3)]
    scene = SceneState(tuple(persons), (build_group("g", persons[:2]),))
    obstacles = [(float(x), float(y)) for x, y in rng.uniform([-1, -2], [4, 3], size=(15, 2))]
    obstacles += [persons[0].pose.xy]
    return spec, static, obstacles, scene


def dijkstra_cost(costs, s, g, weight, blocked):
    h, w = costs.shape
    graph = lil_matrix((h * w, h * w))
    for i in range(h):
        for j in range(w):
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == dj == 0:
                        continue
                    ni, nj = i + di, j + dj
                    if 0 <= ni < h and 0 <= nj < w and costs[ni, nj] < blocked:
                        step = math.sqrt(2.0) if di and dj else 1.0
                        graph[i * w + j, ni * w + nj] = step * (1.0 + weight * costs[ni, nj])
    d = dijkstra(graph.tocsr(), indices=s[0] * w + s[1])
    return d[g[0] * w + g[1]]


def path_cost(costs, path, weight):
    total = 0.0
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        assert max(abs(i1 - i0), abs(j1 - j0)) == 1
        step = math.sqrt(2.0) if i0 != i1 and j0 != j1 else 1.0
        total += step * (1.0 + weight * costs[i1, j1])
    return total
