"""Risk-aware A* over graph snapshots, sub-goal selection and path smoothing.

Edge cost is ``d * (Gamma * w + 1)``; the heuristic is the 3D distance to
the target node, which never overestimates since every edge costs at least
its length.  Larger ``Gamma`` trades distance for lower accumulated risk.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import GraphSnapshot, NodeState, TrgGraph
from .elevation import ElevationMap, heights_in_disk

STRATEGIES = {"optimistic": 1.0, "balanced": 3.0, "conservative": 10.0}


class StartUnattachable(ValueError):
    pass


def resolve_gamma(strategy: str | None = None, gamma: float | None = None) -> float:
    """An explicit ``gamma`` wins over a strategy name; default is balanced."""
    if gamma is not None:
        if not gamma >= 0:
            raise ValueError(f"Gamma must be >= 0, got {gamma}")
        return float(gamma)
    if strategy is None:
        return STRATEGIES["balanced"]
    try:
        return STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}") from None


@dataclass(frozen=True)
class PlanQuery:
    start_xy: tuple[float, float]
    goal_xy: tuple[float, float]
    gamma: float = 3.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"Gamma must be >= 0, got {self.gamma}")


@dataclass
class PlanResult:
    status: str
    node_path: list[int] = field(default_factory=list)
    waypoints: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    total_cost: float = math.inf
    L_path: float = 0.0
    W: float = 0.0
    is_subgoal: bool = False
    planning_time: float = 0.0
    edge_d: list[float] = field(default_factory=list)
    edge_w: list[float] = field(default_factory=list)
    gamma: float = 0.0
    planner: str = "trg"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def dist_sum(self) -> float:
        return float(sum(self.edge_d))

    @property
    def risk_sum(self) -> float:
        """Distance-weighted accumulated risk, the objective traded against distance."""
        return float(sum(d * w for d, w in zip(self.edge_d, self.edge_w)))

    def summary(self, include_timing: bool = True) -> dict:
        out = {
            "status": self.status,
            "planner": self.planner,
            "gamma": self.gamma,
            "is_subgoal": self.is_subgoal,
            "node_path": [int(i) for i in self.node_path],
            "edges": [{"from": int(a), "to": int(b), "d": float(d), "w": float(w)}
                      for a, b, d, w in zip(self.node_path, self.node_path[1:], self.edge_d, self.edge_w)],
            "total_cost": self.total_cost if math.isfinite(self.total_cost) else None,
            "L_path": self.L_path,
            "W": self.W,
        }
        if include_timing:
            out["planning_time_ms"] = self.planning_time * 1e3
        return out


def polyline_length(points) -> float:
    P = np.asarray(points, dtype=np.float64)
    if len(P) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(P, axis=0), axis=1)))


def smooth_path(waypoints, window: int = 5, emap: ElevationMap | None = None, radius: float = 0.2) -> np.ndarray:
    """Centered moving average of the xy track with the endpoints pinned.

    Near the ends the window shrinks symmetrically.  With a map, each smoothed
    point takes the median terrain height within ``radius``; otherwise z is
    averaged like xy.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd count >= 1, got {window}")
    P = np.asarray(waypoints, dtype=np.float64).reshape(-1, 3)
    out = P.copy()
    n = len(P)
    k = window // 2
    if k == 0 or n < 3:
        return out
    for i in range(1, n - 1):
        h = min(k, i, n - 1 - i)
        seg = P[i - h:i + h + 1]
        out[i] = seg.mean(axis=0)
        if emap is not None:
            s = heights_in_disk(emap, out[i, :2], radius)
            if len(s):
                out[i, 2] = float(np.median(s[:, 2]))
    return out


def _as_snapshot(graph) -> GraphSnapshot:
    return graph.snapshot() if isinstance(graph, TrgGraph) else graph


def select_subgoal(graph, goal_xy) -> int | None:
    """Frontier node nearest to ``goal_xy`` in xy (ties to the smaller id); None if no frontier."""
    snap = _as_snapshot(graph)
    return snap.nearest(goal_xy, math.inf, mask=snap.state == NodeState.FRONTIER)


def path_valid(graph, result: PlanResult) -> bool:
    snap = _as_snapshot(graph)
    path = result.node_path
    if not path:
        return False
    for i in path:
        if not (0 <= i < snap.n) or snap.state[i] == NodeState.INVALID:
            return False
    return all(snap.has_edge(a, b) for a, b in zip(path, path[1:]))


def edge_costs(snap: GraphSnapshot, gamma: float) -> np.ndarray:
    return snap.dist * (gamma * snap.weight + 1.0)


def plan(graph, query: PlanQuery, smooth_window: int = 5, emap: ElevationMap | None = None) -> PlanResult:
    """Plan from ``query.start_xy`` towards ``query.goal_xy`` on a snapshot.

    The start attaches to the nearest usable node within ``r_exp``.  When no
    usable node lies within ``r_exp`` of the goal, the nearest Frontier node
    becomes the target and ``is_subgoal`` is set.
    """
    t0 = time.perf_counter()
    snap = _as_snapshot(graph)
    p = snap.params
    gamma = float(query.gamma)
    start = snap.nearest(query.start_xy, p.r_exp)
    if start is None:
        raise StartUnattachable(f"no usable node within {p.r_exp} m of start {tuple(query.start_xy)}")
    target = snap.nearest(query.goal_xy, p.r_exp)
    subgoal = False
    if target is None:
        target = select_subgoal(snap, query.goal_xy)
        subgoal = True
        if target is None:
            return PlanResult("unreachable", is_subgoal=True, gamma=gamma,
                              planning_time=time.perf_counter() - t0)
    cost = edge_costs(snap, gamma)
    g, parent = K.astar_csr(snap.indptr, snap.indices, cost, snap.pos, snap.usable,
                            np.int64(start), np.int64(target))
    if not math.isfinite(g[target]):
        return PlanResult("unreachable", is_subgoal=subgoal, gamma=gamma,
                          planning_time=time.perf_counter() - t0)
    path = [int(target)]
    while path[-1] != start:
        path.append(int(parent[path[-1]]))
    path.reverse()
    slots = [snap.slot(a, b) for a, b in zip(path, path[1:])]
    pts = snap.pos[path]
    res = PlanResult(
        "ok",
        node_path=path,
        total_cost=float(g[target]),
        is_subgoal=subgoal,
        edge_d=[float(snap.dist[s]) for s in slots],
        edge_w=[float(snap.weight[s]) for s in slots],
        gamma=gamma,
    )
    res.L_path = polyline_length(pts)
    res.W = float(sum(res.edge_w)) / res.L_path if res.L_path > 0 else 0.0
    res.waypoints = smooth_path(pts, smooth_window, emap, p.r_robot)
    res.planning_time = time.perf_counter() - t0
    return res


# -- export --------------------------------------------------------------------

def write_path_csv(result: PlanResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z"])
        for x, y, z in np.asarray(result.waypoints).reshape(-1, 3):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z))])


def read_path_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] == ["x", "y", "z"]:
        rows = rows[1:]
    return np.array([[float(v) for v in r] for r in rows if r], dtype=np.float64).reshape(-1, 3)


def write_plan_json(result: PlanResult, path, include_timing: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.summary(include_timing), fh, indent=1)
        fh.write("\n")
