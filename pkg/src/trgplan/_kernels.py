"""Compiled inner loops.

Each kernel mirrors a reference routine written with plain numpy elsewhere in
the package (same cell-membership arithmetic, same gate order); the test
suite cross-checks the two.  Heights are passed as raw ``(rows, cols)`` arrays
with NaN for missing cells.
"""
import heapq
import math

import numpy as np
from numba import njit

EDGE_OK = 0
EDGE_FEW_SAMPLES = 1
EDGE_ROUGH = 2
EDGE_STEEP = 3
EDGE_COLLINEAR = 4
EDGE_DEGENERATE = 5

# relative eigenvalue floor below which a sample set is treated as collinear
RANK_TOL = 1e-10


@njit(cache=True)
def _window(nrows, ncols, ox, oy, res, cx, cy, rx, ry):
    ix0 = max(int(math.floor((cx - rx - ox) / res)), 0)
    ix1 = min(int(math.ceil((cx + rx - ox) / res)), ncols - 1)
    iy0 = max(int(math.floor((cy - ry - oy) / res)), 0)
    iy1 = min(int(math.ceil((cy + ry - oy) / res)), nrows - 1)
    return ix0, ix1, iy0, iy1


@njit(cache=True)
def disk_stats(H, ox, oy, res, cx, cy, r):
    """Return ``(count, median, max |z - median|)`` over the disk samples."""
    nrows, ncols = H.shape
    ix0, ix1, iy0, iy1 = _window(nrows, ncols, ox, oy, res, cx, cy, r, r)
    if ix0 > ix1 or iy0 > iy1:
        return 0, np.nan, np.nan
    buf = np.empty((iy1 - iy0 + 1) * (ix1 - ix0 + 1))
    n = 0
    r2 = r * r
    for iy in range(iy0, iy1 + 1):
        dy = (oy + iy * res) - cy
        for ix in range(ix0, ix1 + 1):
            dx = (ox + ix * res) - cx
            if dx * dx + dy * dy <= r2:
                z = H[iy, ix]
                if not np.isnan(z):
                    buf[n] = z
                    n += 1
    if n == 0:
        return 0, np.nan, np.nan
    med = np.median(buf[:n])
    dev = 0.0
    for k in range(n):
        e = abs(buf[k] - med)
        if e > dev:
            dev = e
    return n, med, dev


@njit(cache=True)
def disk_plane_sine(H, ox, oy, res, cx, cy, r):
    """Sine of the inclination of the least-squares plane over a disk (NaN if < 3 samples)."""
    nrows, ncols = H.shape
    ix0, ix1, iy0, iy1 = _window(nrows, ncols, ox, oy, res, cx, cy, r, r)
    if ix0 > ix1 or iy0 > iy1:
        return np.nan
    m = (iy1 - iy0 + 1) * (ix1 - ix0 + 1)
    P = np.empty((m, 3))
    n = 0
    r2 = r * r
    for iy in range(iy0, iy1 + 1):
        y = oy + iy * res
        dy = y - cy
        for ix in range(ix0, ix1 + 1):
            x = ox + ix * res
            dx = x - cx
            if dx * dx + dy * dy <= r2:
                z = H[iy, ix]
                if not np.isnan(z):
                    P[n, 0] = x
                    P[n, 1] = y
                    P[n, 2] = z
                    n += 1
    if n < 3:
        return np.nan
    C = _covariance(P, n)
    w, V = np.linalg.eigh(C)
    nz = abs(V[2, 0])
    return math.sqrt(max(0.0, 1.0 - nz * nz))


@njit(cache=True)
def _covariance(P, n):
    mx = 0.0
    my = 0.0
    mz = 0.0
    for k in range(n):
        mx += P[k, 0]
        my += P[k, 1]
        mz += P[k, 2]
    mx /= n
    my /= n
    mz /= n
    C = np.zeros((3, 3))
    for k in range(n):
        a = P[k, 0] - mx
        b = P[k, 1] - my
        c = P[k, 2] - mz
        C[0, 0] += a * a
        C[0, 1] += a * b
        C[0, 2] += a * c
        C[1, 1] += b * b
        C[1, 2] += b * c
        C[2, 2] += c * c
    C[1, 0] = C[0, 1]
    C[2, 0] = C[0, 2]
    C[2, 1] = C[1, 2]
    for i in range(3):
        for j in range(3):
            C[i, j] /= n
    return C


@njit(cache=True)
def eval_edge(H, ox, oy, res, pix, piy, piz, pjx, pjy, pjz,
              hw, h_max, r_robot, gamma, min_samples):
    """Feasibility code and risk weight of one edge (weight NaN unless feasible)."""
    dx = pjx - pix
    dy = pjy - piy
    d = math.hypot(dx, dy)
    if d < res:
        return EDGE_DEGENERATE, np.nan
    cx = 0.5 * (pix + pjx)
    cy = 0.5 * (piy + pjy)
    ux = dx / d
    uy = dy / d
    a = 0.5 * d + hw
    b = hw
    nrows, ncols = H.shape
    ix0, ix1, iy0, iy1 = _window(nrows, ncols, ox, oy, res, cx, cy, a, a)
    if ix0 > ix1 or iy0 > iy1:
        return EDGE_FEW_SAMPLES, np.nan
    P = np.empty(((iy1 - iy0 + 1) * (ix1 - ix0 + 1), 3))
    n = 0
    for iy in range(iy0, iy1 + 1):
        y = oy + iy * res
        ey = y - cy
        for ix in range(ix0, ix1 + 1):
            x = ox + ix * res
            ex = x - cx
            s = (ex * ux + ey * uy) / a
            t = (ey * ux - ex * uy) / b
            if s * s + t * t <= 1.0:
                z = H[iy, ix]
                if not np.isnan(z):
                    P[n, 0] = x
                    P[n, 1] = y
                    P[n, 2] = z
                    n += 1
    if n < min_samples:
        return EDGE_FEW_SAMPLES, np.nan
    med = np.median(P[:n, 2])
    for k in range(n):
        if abs(P[k, 2] - med) >= h_max:
            return EDGE_ROUGH, np.nan
    if math.atan(abs(piz - pjz) / d) >= math.atan(h_max / r_robot):
        return EDGE_STEEP, np.nan
    C = _covariance(P, n)
    w, V = np.linalg.eigh(C)
    if w[1] <= RANK_TOL * max(w[2], 1e-300):
        return EDGE_COLLINEAR, np.nan
    # eigh is ascending: columns 2 and 1 span the plane, column 0 is the normal
    d2 = abs(V[0, 2] * ux + V[1, 2] * uy)
    d1 = abs(V[0, 1] * ux + V[1, 1] * uy)
    if d2 >= d1:
        r_lon = abs(V[2, 2])
        r_lat = abs(V[2, 1])
    else:
        r_lon = abs(V[2, 1])
        r_lat = abs(V[2, 2])
    wgt = gamma * r_lon + (1.0 - gamma) * r_lat
    return EDGE_OK, min(max(wgt, 0.0), 1.0)


@njit(cache=True)
def eval_edges(H, ox, oy, res, Pi, Pj, hw, h_max, r_robot, gamma, min_samples):
    m = Pi.shape[0]
    codes = np.empty(m, dtype=np.int64)
    weights = np.empty(m)
    for k in range(m):
        c, w = eval_edge(H, ox, oy, res, Pi[k, 0], Pi[k, 1], Pi[k, 2],
                         Pj[k, 0], Pj[k, 1], Pj[k, 2], hw, h_max, r_robot, gamma, min_samples)
        codes[k] = c
        weights[k] = w
    return codes, weights


@njit(cache=True)
def stability_grid(H, ox, oy, res, r, h_max, min_samples):
    """Stability flag and median height at every cell center."""
    nrows, ncols = H.shape
    stable = np.zeros((nrows, ncols), dtype=np.bool_)
    med = np.full((nrows, ncols), np.nan)
    for iy in range(nrows):
        for ix in range(ncols):
            n, m, dev = disk_stats(H, ox, oy, res, ox + ix * res, oy + iy * res, r)
            if n > 0:
                med[iy, ix] = m
                stable[iy, ix] = n >= min_samples and dev < h_max
    return stable, med


@njit(cache=True)
def astar_csr(indptr, indices, cost, pos, usable, start, goal):
    """A* over a CSR graph with a 3D straight-line heuristic to ``goal``.

    Heap entries are ``(f, g, node)`` so ties on f go to the lower g, then to
    the smaller node id.  Returns the g-cost and parent arrays.
    """
    n = indptr.shape[0] - 1
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    gx = pos[goal, 0]
    gy = pos[goal, 1]
    gz = pos[goal, 2]
    g[start] = 0.0
    h0 = math.sqrt((pos[start, 0] - gx) ** 2 + (pos[start, 1] - gy) ** 2 + (pos[start, 2] - gz) ** 2)
    heap = [(h0, 0.0, np.int64(start))]
    while len(heap) > 0:
        f, gc, u = heapq.heappop(heap)
        if closed[u] or gc > g[u]:
            continue
        closed[u] = True
        if u == goal:
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if closed[v] or not usable[v]:
                continue
            ng = gc + cost[k]
            if ng < g[v]:
                g[v] = ng
                parent[v] = u
                h = math.sqrt((pos[v, 0] - gx) ** 2 + (pos[v, 1] - gy) ** 2 + (pos[v, 2] - gz) ** 2)
                heapq.heappush(heap, (ng + h, ng, np.int64(v)))
    return g, parent


@njit(cache=True)
def astar_grid(free, res, start, goal):
    """8-connected grid A* (octile heuristic); returns the flat-index path or empty."""
    nrows, ncols = free.shape
    n = nrows * ncols
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    gr = goal // ncols
    gcol = goal % ncols
    diag = math.sqrt(2.0) * res
    g[start] = 0.0
    heap = [(0.0, 0.0, np.int64(start))]
    found = False
    while len(heap) > 0:
        f, gc, u = heapq.heappop(heap)
        if closed[u] or gc > g[u]:
            continue
        closed[u] = True
        if u == goal:
            found = True
            break
        ur = u // ncols
        uc = u % ncols
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                vr = ur + dr
                vc = uc + dc
                if vr < 0 or vr >= nrows or vc < 0 or vc >= ncols or not free[vr, vc]:
                    continue
                v = vr * ncols + vc
                if closed[v]:
                    continue
                ng = gc + (diag if dr != 0 and dc != 0 else res)
                if ng < g[v]:
                    g[v] = ng
                    parent[v] = u
                    ar = abs(vr - gr)
                    ac = abs(vc - gcol)
                    h = res * (max(ar, ac) - min(ar, ac)) + diag * min(ar, ac)
                    heapq.heappush(heap, (ng + h, ng, np.int64(v)))
    if not found:
        return np.empty(0, dtype=np.int64), np.inf
    length = 0
    u = goal
    while u != -1:
        length += 1
        u = parent[u]
    path = np.empty(length, dtype=np.int64)
    u = goal
    for k in range(length - 1, -1, -1):
        path[k] = u
        u = parent[u]
    return path, g[goal]
