"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or when
``SOCIALNAV_PURE=1`` is set.
"""

import heapq
import math

import numpy as np


def _gaussian(xs, ys, e):
    # Work in the entity frame: the sign of the forward and lateral
    # coordinates picks the quadrant, which avoids computing the angle.
    dx = xs - e[0]
    dy = ys - e[1]
    c, s = math.cos(e[2]), math.sin(e[2])
    lx = c * dx + s * dy
    ly = c * dy - s * dx
    a = lx / (2.0 * np.where(lx > 0, e[4], e[5]))
    b = ly / (2.0 * np.where(ly < 0, e[7], e[6]))
    return e[3] * np.exp(-(a * a + b * b))


def rasterize_max(grid, origin_x, origin_y, resolution, entities, support):
    h, w = grid.shape
    acc = np.zeros((h, w), dtype=np.float64)
    for e, r in zip(entities, support):
        j0 = max(0, int(math.floor((e[0] - r - origin_x) / resolution)))
        j1 = min(w - 1, int(math.ceil((e[0] + r - origin_x) / resolution)))
        i0 = max(0, int(math.floor((e[1] - r - origin_y) / resolution)))
        i1 = min(h - 1, int(math.ceil((e[1] + r - origin_y) / resolution)))
        if j1 < j0 or i1 < i0:
            continue
        cy = origin_y + (np.arange(i0, i1 + 1) + 0.5) * resolution
        cx = origin_x + (np.arange(j0, j1 + 1) + 0.5) * resolution
        xs, ys = np.meshgrid(cx, cy)
        sub = acc[i0:i1 + 1, j0:j1 + 1]
        np.maximum(sub, _gaussian(xs, ys, e), out=sub)
    q = np.floor(acc + 0.5).astype(np.int64)
    known = grid != 255
    grid[known] = np.maximum(grid[known], q[known]).astype(np.uint8)


def field_values(xs, ys, entities):
    out = np.zeros(len(xs), dtype=np.float64)
    for e in entities:
        np.maximum(out, _gaussian(np.asarray(xs), np.asarray(ys), e), out=out)
    return out


_MOVES = [(-1, -1, math.sqrt(2.0)), (-1, 0, 1.0), (-1, 1, math.sqrt(2.0)), (0, -1, 1.0),
          (0, 1, 1.0), (1, -1, math.sqrt(2.0)), (1, 0, 1.0), (1, 1, math.sqrt(2.0))]


def _octile(i, j, gi, gj):
    a = abs(i - gi)
    b = abs(j - gj)
    if a > b:
        a, b = b, a
    return b + (math.sqrt(2.0) - 1.0) * a


def astar(costs, si, sj, gi, gj, weight, blocked):
    h, w = costs.shape
    if costs[gi, gj] >= blocked:
        return None
    c = costs.tolist()
    start = si * w + sj
    goal = gi * w + gj
    g = {start: 0.0}
    parent = {start: -1}
    closed = set()
    pq = [(_octile(si, sj, gi, gj), start)]
    while pq:
        _, cur = heapq.heappop(pq)
        if cur in closed:
            continue
        closed.add(cur)
        if cur == goal:
            break
        ci, cj = divmod(cur, w)
        gc = g[cur]
        for di, dj, dl in _MOVES:
            ni = ci + di
            nj = cj + dj
            if ni < 0 or nj < 0 or ni >= h or nj >= w:
                continue
            cost = c[ni][nj]
            if cost >= blocked:
                continue
            nxt = ni * w + nj
            if nxt in closed:
                continue
            cand = gc + dl * (1.0 + weight * cost)
            if cand < g.get(nxt, math.inf):
                g[nxt] = cand
                parent[nxt] = cur
                heapq.heappush(pq, (cand + _octile(ni, nj, gi, gj), nxt))
    if goal not in closed:
        return None
    path = []
    cur = goal
    while cur != -1:
        path.append(divmod(cur, w))
        cur = parent[cur]
    path.reverse()
    return path
