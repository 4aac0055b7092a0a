# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled inner loops: social field rasterization and grid A*."""

from libc.math cimport cos, sin, exp, log, sqrt, fabs, floor, ceil
from libcpp.queue cimport priority_queue
from libcpp.pair cimport pair
from libcpp.vector cimport vector

import numpy as np
cimport numpy as cnp

cnp.import_array()

def rasterize_max(cnp.uint8_t[:, ::1] grid, double origin_x, double origin_y, double resolution,
                  double[:, ::1] entities, double[::1] support):
    """Max-combine quantized Gaussian costs of ``entities`` into ``grid`` in place.

    Each entity row is (x, y, theta, amplitude, sigma_f, sigma_r, sigma_sl,
    sigma_sr); ``support[k]`` bounds the radius visited around entity k.
    Cells holding 255 (unknown) are left untouched.
    """
    cdef Py_ssize_t h = grid.shape[0]
    cdef Py_ssize_t w = grid.shape[1]
    cdef Py_ssize_t n = entities.shape[0]
    cdef Py_ssize_t k, i, j, i0, i1, j0, j1
    cdef double dx, dy, r, v, c, s, amp, inv_f, inv_r, inv_l, inv_s, cutoff, lx, ly, a, b, ex
    cdef int q
    cdef double[:, ::1] acc = np.zeros((h, w), dtype=np.float64)
    with nogil:
        for k in range(n):
            r = support[k]
            j0 = <Py_ssize_t>floor((entities[k, 0] - r - origin_x) / resolution)
            j1 = <Py_ssize_t>ceil((entities[k, 0] + r - origin_x) / resolution)
            i0 = <Py_ssize_t>floor((entities[k, 1] - r - origin_y) / resolution)
            i1 = <Py_ssize_t>ceil((entities[k, 1] + r - origin_y) / resolution)
            if j0 < 0:
                j0 = 0
            if i0 < 0:
                i0 = 0
            if j1 > w - 1:
                j1 = w - 1
            if i1 > h - 1:
                i1 = h - 1
            c = cos(entities[k, 2])
            s = sin(entities[k, 2])
            amp = entities[k, 3]
            inv_f = 1.0 / (2.0 * entities[k, 4])
            inv_r = 1.0 / (2.0 * entities[k, 5])
            inv_l = 1.0 / (2.0 * entities[k, 6])
            inv_s = 1.0 / (2.0 * entities[k, 7])
            # exponents past this give values below 0.5, which quantize to 0
            cutoff = log(2.0 * amp) if amp >= 0.5 else -1.0e9
            for i in range(i0, i1 + 1):
                dy = origin_y + (i + 0.5) * resolution - entities[k, 1]
                for j in range(j0, j1 + 1):
                    dx = origin_x + (j + 0.5) * resolution - entities[k, 0]
                    lx = c * dx + s * dy
                    ly = c * dy - s * dx
                    a = lx * (inv_f if lx > 0 else inv_r)
                    b = ly * (inv_s if ly < 0 else inv_l)
                    ex = a * a + b * b
                    if ex > cutoff + 1e-9:
                        continue
                    v = amp * exp(-ex)
                    if v > acc[i, j]:
                        acc[i, j] = v
        for i in range(h):
            for j in range(w):
                if grid[i, j] == 255:
                    continue
                q = <int>floor(acc[i, j] + 0.5)
                if q > grid[i, j]:
                    grid[i, j] = <cnp.uint8_t>q


def field_values(double[::1] xs, double[::1] ys, double[:, ::1] entities):
    """Max over entities of the Gaussian at each query point (unquantized)."""
    cdef Py_ssize_t m = xs.shape[0]
    cdef Py_ssize_t n = entities.shape[0]
    cdef Py_ssize_t i, k
    cdef double v, dx, dy, lx, ly, a, b
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] o = out
    # per entity: cos, sin and the reciprocal of twice each deviation
    cdef double[:, ::1] pre = np.empty((n, 6), dtype=np.float64)
    for k in range(n):
        pre[k, 0] = cos(entities[k, 2])
        pre[k, 1] = sin(entities[k, 2])
        pre[k, 2] = 1.0 / (2.0 * entities[k, 4])
        pre[k, 3] = 1.0 / (2.0 * entities[k, 5])
        pre[k, 4] = 1.0 / (2.0 * entities[k, 6])
        pre[k, 5] = 1.0 / (2.0 * entities[k, 7])
    with nogil:
        for i in range(m):
            for k in range(n):
                dx = xs[i] - entities[k, 0]
                dy = ys[i] - entities[k, 1]
                lx = pre[k, 0] * dx + pre[k, 1] * dy
                ly = pre[k, 0] * dy - pre[k, 1] * dx
                a = lx * (pre[k, 2] if lx > 0 else pre[k, 3])
                b = ly * (pre[k, 5] if ly < 0 else pre[k, 4])
                v = entities[k, 3] * exp(-(a * a + b * b))
                if v > o[i]:
                    o[i] = v
    return out


def astar(const cnp.uint8_t[:, ::1] costs, Py_ssize_t si, Py_ssize_t sj, Py_ssize_t gi, Py_ssize_t gj,
          double weight, int blocked):
    """8-connected A* minimizing sum of step_length * (1 + weight * cost).

    Cells with cost >= ``blocked`` are impassable except the start cell.
    Returns a list of (row, col) from start to goal, or None.
    """
    cdef Py_ssize_t h = costs.shape[0]
    cdef Py_ssize_t w = costs.shape[1]
    cdef Py_ssize_t n = h * w
    cdef double INF = float("inf")
    cdef vector[double] g = vector[double](n, INF)
    cdef vector[Py_ssize_t] parent = vector[Py_ssize_t](n, -1)
    cdef vector[char] closed = vector[char](n, 0)
    cdef priority_queue[pair[double, Py_ssize_t]] pq
    cdef Py_ssize_t start = si * w + sj
    cdef Py_ssize_t goal = gi * w + gj
    cdef Py_ssize_t cur, ci, cj, ni, nj, nxt, d
    cdef double step, cand, hdx, hdy, hval
    cdef int di[8]
    cdef int dj[8]
    cdef double dl[8]
    cdef double SQRT2 = sqrt(2.0)
    di[:] = [-1, -1, -1, 0, 0, 1, 1, 1]
    dj[:] = [-1, 0, 1, -1, 1, -1, 0, 1]
    dl[:] = [SQRT2, 1.0, SQRT2, 1.0, 1.0, SQRT2, 1.0, SQRT2]
    if costs[gi, gj] >= blocked:
        return None
    g[start] = 0.0
    pq.push(pair[double, Py_ssize_t](-_octile(si, sj, gi, gj), -start))
    with nogil:
        while not pq.empty():
            cur = -pq.top().second
            pq.pop()
            if closed[cur]:
                continue
            closed[cur] = 1
            if cur == goal:
                break
            ci = cur // w
            cj = cur % w
            for d in range(8):
                ni = ci + di[d]
                nj = cj + dj[d]
                if ni < 0 or nj < 0 or ni >= h or nj >= w:
                    continue
                if costs[ni, nj] >= blocked:
                    continue
                nxt = ni * w + nj
                if closed[nxt]:
                    continue
                step = dl[d] * (1.0 + weight * costs[ni, nj])
                cand = g[cur] + step
                if cand < g[nxt]:
                    g[nxt] = cand
                    parent[nxt] = cur
                    hval = _octile(ni, nj, gi, gj)
                    pq.push(pair[double, Py_ssize_t](-(cand + hval), -nxt))
    if not closed[goal]:
        return None
    path = []
    cur = goal
    while cur != -1:
        path.append((cur // w, cur % w))
        cur = parent[cur]
    path.reverse()
    return path


cdef inline double _octile(Py_ssize_t i, Py_ssize_t j, Py_ssize_t gi, Py_ssize_t gj) nogil:
    cdef double a = fabs(<double>(i - gi))
    cdef double b = fabs(<double>(j - gj))
    if a > b:
        a, b = b, a
    return b + (sqrt(2.0) - 1.0) * a
