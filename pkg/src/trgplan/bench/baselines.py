"""Comparison planners: 8-connected grid A* and PRM*.

Both treat a position as free when it passes the same stability test the
graph uses, and report risk on the same scale: the smoothed path is cut into
pieces of about ``r_exp`` and each piece is scored with the edge risk model.
"""
from __future__ import annotations

import math
import time
import weakref

import numpy as np
from scipy.spatial import cKDTree

from .. import _kernels as K
from ..construct import make_rng
from ..core import TrgParams, check_stability, evaluate_edges
from ..elevation import ElevationMap
from ..planning import PlanResult, polyline_length, smooth_path

_stability_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def stability_grid(emap: ElevationMap, params: TrgParams):
    """``(stable, median)`` grids at every cell center, cached per map and params."""
    per_map = _stability_cache.setdefault(emap, {})
    key = (params.r_robot, params.h_max, params.min_plane_samples)
    if key not in per_map:
        per_map[key] = K.stability_grid(emap.heights, emap.origin[0], emap.origin[1], emap.resolution,
                                        params.r_robot, params.h_max, params.min_plane_samples)
    return per_map[key]


def resample(points, spacing: float) -> np.ndarray:
    """Points along the xy polyline at roughly even ``spacing`` (endpoints kept)."""
    P = np.asarray(points, dtype=np.float64)
    seg = np.hypot(*np.diff(P[:, :2], axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0:
        return P[:1].copy()
    k = max(1, int(round(total / spacing)))
    t = np.linspace(0.0, total, k + 1)
    return np.column_stack([np.interp(t, s, P[:, c]) for c in range(P.shape[1])])


def path_segment_risk(emap: ElevationMap, waypoints, params: TrgParams):
    """Segment lengths and risk weights along a path, gates disabled."""
    pts = resample(waypoints, params.r_exp)
    if len(pts) < 2:
        return [], []
    for p in pts:
        ok, med = check_stability(emap, p[:2], params)
        if med is not None:
            p[2] = med
    codes, w = K.eval_edges(emap.heights, emap.origin[0], emap.origin[1], emap.resolution,
                            np.ascontiguousarray(pts[:-1]), np.ascontiguousarray(pts[1:]),
                            params.r_robot, math.inf, params.r_robot, params.gamma, 3)
    d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = codes == K.EDGE_OK
    return d[keep].tolist(), w[keep].tolist()


def _finish(result: PlanResult, emap, nodes_xyz, params, smooth_window):
    result.L_path = polyline_length(nodes_xyz)
    result.waypoints = smooth_path(nodes_xyz, smooth_window, emap, params.r_robot)
    d, w = path_segment_risk(emap, result.waypoints, params)
    result.edge_d, result.edge_w = d, w
    result.W = float(sum(w)) / result.L_path if result.L_path > 0 else 0.0
    return result


def baseline_astar_grid(emap: ElevationMap, start, goal, params: TrgParams | None = None,
                        smooth_window: int = 5) -> PlanResult:
    params = params or TrgParams()
    t0 = time.perf_counter()
    stable, med = stability_grid(emap, params)
    nrows, ncols = stable.shape
    (sx, gx), (sy, gy) = emap.world_to_cell([start[0], goal[0]], [start[1], goal[1]])
    for cx, cy in ((sx, sy), (gx, gy)):
        if not (0 <= cx < ncols and 0 <= cy < nrows):
            raise ValueError("endpoint outside the map")
    if not (stable[sy, sx] and stable[gy, gx]):
        return PlanResult("unreachable", planner="astar", planning_time=time.perf_counter() - t0)
    path, cost = K.astar_grid(stable, emap.resolution, int(sy * ncols + sx), int(gy * ncols + gx))
    if len(path) == 0:
        return PlanResult("unreachable", planner="astar", planning_time=time.perf_counter() - t0)
    iy, ix = np.divmod(path, ncols)
    x, y = emap.cell_center(ix, iy)
    xyz = np.column_stack((x, y, med[iy, ix]))
    res = PlanResult("ok", node_path=path.tolist(), total_cost=float(cost), planner="astar")
    _finish(res, emap, xyz, params, smooth_window)
    res.planning_time = time.perf_counter() - t0
    return res


def prm_radius(n: int, free_area: float) -> float:
    """PRM* connection radius for a 2D free space of area ``free_area``."""
    gamma_prm = 2.0 * math.sqrt(1.5) * math.sqrt(free_area / math.pi) * 1.001
    return gamma_prm * math.sqrt(math.log(n) / n)


class PrmRoadmap:
    """Multi-query PRM* roadmap; queries attach start and goal on demand."""

    def __init__(self, emap: ElevationMap, n_samples: int, seed, params: TrgParams | None = None):
        if n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        t0 = time.perf_counter()
        self.emap = emap
        self.params = params = params or TrgParams()
        self.n_samples = n_samples
        stable, med = stability_grid(emap, params)
        free_area = float(stable.mean()) * (emap.extent[1] - emap.extent[0]) * (emap.extent[3] - emap.extent[2])
        rng = make_rng(seed)
        xmin, xmax, ymin, ymax = emap.extent
        pts = []
        budget = 50 * n_samples
        while len(pts) < n_samples and budget > 0:
            batch = rng.uniform((xmin, ymin), (xmax, ymax), size=(n_samples, 2))
            for x, y in batch:
                budget -= 1
                ok, z = check_stability(emap, (x, y), params)
                if ok:
                    pts.append((x, y, z))
                    if len(pts) == n_samples:
                        break
        self.nodes = np.array(pts, dtype=np.float64).reshape(-1, 3)
        self.radius = prm_radius(max(len(self.nodes), 2), max(free_area, 1e-9))
        self.tree = cKDTree(self.nodes[:, :2])
        pairs = self.tree.query_pairs(self.radius, output_type="ndarray")
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs.reshape(0, 2)
        u, v, d, w = self._check(self.nodes[pairs[:, 0]], self.nodes[pairs[:, 1]], pairs[:, 0], pairs[:, 1])
        self.u, self.v, self.d, self.w = u, v, d, w
        self.build_time = time.perf_counter() - t0

    def _check(self, Pi, Pj, ui, vi):
        if len(Pi) == 0:
            e = np.empty(0)
            return ui[:0], vi[:0], e, e
        ok_xy = np.hypot(Pi[:, 0] - Pj[:, 0], Pi[:, 1] - Pj[:, 1]) >= self.emap.resolution
        Pi, Pj, ui, vi = Pi[ok_xy], Pj[ok_xy], ui[ok_xy], vi[ok_xy]
        codes, w = evaluate_edges(self.emap, Pi, Pj, self.params)
        keep = codes == K.EDGE_OK
        d = np.linalg.norm(Pi[keep] - Pj[keep], axis=1)
        return ui[keep], vi[keep], d, w[keep]

    def query(self, start, goal, smooth_window: int = 5) -> PlanResult:
        t0 = time.perf_counter()
        params = self.params
        ends = []
        for p in (start, goal):
            ok, z = check_stability(self.emap, p, params)
            if not ok:
                return PlanResult("unreachable", planner="prm", planning_time=time.perf_counter() - t0)
            ends.append((float(p[0]), float(p[1]), z))
        n = len(self.nodes)
        pos = np.vstack([self.nodes, np.array(ends)])
        us, vs, ds = [self.u], [self.v], [self.d]
        for k, e in enumerate(ends):
            nb = np.array(sorted(self.tree.query_ball_point(e[:2], self.radius)), dtype=np.int64)
            me = np.full(len(nb), n + k, dtype=np.int64)
            u, v, d, _ = self._check(np.repeat(pos[[n + k]], len(nb), axis=0), pos[nb], me, nb)
            us.append(u)
            vs.append(v)
            ds.append(d)
        if math.dist(ends[0][:2], ends[1][:2]) <= self.radius:
            u, v, d, _ = self._check(pos[[n]], pos[[n + 1]], np.array([n]), np.array([n + 1]))
            us.append(u)
            vs.append(v)
            ds.append(d)
        u = np.concatenate(us)
        v = np.concatenate(vs)
        d = np.concatenate(ds)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        cost = np.concatenate([d, d])
        order = np.lexsort((dst, src))
        src, dst, cost = src[order], dst[order], cost[order]
        indptr = np.zeros(n + 3, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n + 2), out=indptr[1:])
        usable = np.ones(n + 2, dtype=np.bool_)
        g, parent = K.astar_csr(indptr, dst.astype(np.int64), cost, pos, usable, np.int64(n), np.int64(n + 1))
        if not math.isfinite(g[n + 1]):
            return PlanResult("unreachable", planner="prm", planning_time=time.perf_counter() - t0)
        path = [n + 1]
        while path[-1] != n:
            path.append(int(parent[path[-1]]))
        path.reverse()
        res = PlanResult("ok", node_path=path, total_cost=float(g[n + 1]), planner="prm")
        _finish(res, self.emap, pos[path], params, smooth_window)
        res.planning_time = time.perf_counter() - t0
        return res


def baseline_prm_star(emap: ElevationMap, start, goal, n_samples: int, seed, params: TrgParams | None = None,
                      smooth_window: int = 5) -> PlanResult:
    """Single-query convenience wrapper around :class:`PrmRoadmap`."""
    return PrmRoadmap(emap, n_samples, seed, params).query(start, goal, smooth_window)
