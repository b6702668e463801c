"""Traversal risk graph: parameters, node/edge storage and the per-node and
per-edge terrain tests.

Node positions and edge attributes live in growable numpy arrays so that a
planning snapshot (CSR adjacency) can be produced without walking Python
objects.  ``TrgNode`` and ``TrgEdge`` are read-only views handed out on
request.
"""
from __future__ import annotations

import json
import math
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from enum import IntEnum

import numpy as np

from . import _kernels as K
from .elevation import ElevationMap, heights_in_disk, heights_in_ellipse, median_height
from .spatial import GridIndex


class PlaneFitError(ValueError):
    pass


@dataclass(frozen=True)
class TrgParams:
    """Robot- and terrain-specific graph parameters (lengths in meters).

    ``coverage_radius`` is the radius of the disk each node contributes to the
    covered area used by the frontier test; it must stay below ``2 * r_robot``
    or no outward probe point could ever leave the area.  ``None`` resolves to
    ``min(r_exp / 2, 1.75 * r_robot)``.
    """

    r_robot: float = 0.2
    r_exp: float = 0.7
    h_max: float = 0.15
    gamma: float = 0.5
    min_plane_samples: int = 4
    coverage_radius: float | None = None

    def __post_init__(self):
        if not 0 < self.r_robot < self.r_exp:
            raise ValueError(f"need 0 < r_robot < r_exp, got r_robot={self.r_robot}, r_exp={self.r_exp}")
        if not self.h_max > 0:
            raise ValueError(f"h_max must be positive, got {self.h_max}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if int(self.min_plane_samples) != self.min_plane_samples or self.min_plane_samples < 3:
            raise ValueError(f"min_plane_samples must be an integer >= 3, got {self.min_plane_samples}")
        if self.coverage_radius is not None and not 0 < self.coverage_radius < 2 * self.r_robot:
            raise ValueError(f"coverage_radius must lie in (0, 2*r_robot), got {self.coverage_radius}")

    @property
    def cover_r(self) -> float:
        if self.coverage_radius is not None:
            return self.coverage_radius
        return min(0.5 * self.r_exp, 1.75 * self.r_robot)

    @property
    def samples_per_expansion(self) -> int:
        return math.ceil(2 * math.pi * self.r_exp / self.r_robot)

    @property
    def max_inclination(self) -> float:
        """Edge inclination bound in radians."""
        return math.atan(self.h_max / self.r_robot)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrgParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**d)


class NodeState(IntEnum):
    INVALID = 0
    VALID = 1
    FRONTIER = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "NodeState":
        return cls[text.upper()]


@dataclass(frozen=True)
class TrgNode:
    id: int
    position: tuple[float, float, float]
    state: NodeState
    edges: frozenset


@dataclass(frozen=True)
class TrgEdge:
    id: int
    from_id: int
    to_id: int
    dist: float
    weight: float


# -- terrain tests ------------------------------------------------------------

def check_stability(emap: ElevationMap, p_xy, params: TrgParams):
    """Stability of the robot-sized disk at ``p_xy``.

    Returns ``(stable, median_z)``; ``median_z`` is None when the disk holds no
    samples.
    """
    n, med, dev = K.disk_stats(emap.heights, emap.origin[0], emap.origin[1], emap.resolution,
                               float(p_xy[0]), float(p_xy[1]), params.r_robot)
    if n == 0:
        return False, None
    return bool(n >= params.min_plane_samples and dev < params.h_max), float(med)


def check_stability_reference(emap, p_xy, params):
    samples = heights_in_disk(emap, p_xy, params.r_robot)
    if len(samples) == 0:
        return False, None
    med = median_height(samples)
    ok = len(samples) >= params.min_plane_samples and bool(np.all(np.abs(samples[:, 2] - med) < params.h_max))
    return ok, med


def node_state(stable: bool, degree: int) -> NodeState:
    return NodeState.VALID if stable and degree > 0 else NodeState.INVALID


def inclination(p_i, p_j) -> float:
    """Angle of the segment ``p_i -> p_j`` above the horizontal, radians."""
    d = math.hypot(p_j[0] - p_i[0], p_j[1] - p_i[1])
    return math.atan(abs(p_i[2] - p_j[2]) / d)


def pca_plane(samples):
    """Centroid, eigenvectors (columns) and eigenvalues of the sample covariance.

    Eigenvalues are sorted descending, so the last column is the plane normal.
    """
    P = np.asarray(samples, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] < 3:
        raise PlaneFitError("plane fit needs at least 3 samples")
    centroid = P.mean(axis=0)
    Q = P - centroid
    C = Q.T @ Q / len(P)
    w, V = np.linalg.eigh(C)
    if w[1] <= K.RANK_TOL * max(w[2], 1e-300):
        raise PlaneFitError("samples are collinear")
    order = [2, 1, 0]
    return centroid, V[:, order], np.clip(w[order], 0.0, None)


def edge_feasible(emap: ElevationMap, p_i, p_j, params: TrgParams):
    """Check the three wiring gates for the edge ``p_i -- p_j``.

    Returns ``(feasible, samples)`` where samples are the ellipse heights,
    reused by :func:`edge_risk`.  Sample sets that are collinear (no plane
    can be fitted) are rejected along with the enumerated gates.
    """
    samples = heights_in_ellipse(emap, p_i, p_j, params.r_robot)
    if len(samples) < params.min_plane_samples:
        return False, samples
    med = median_height(samples)
    if np.any(np.abs(samples[:, 2] - med) >= params.h_max):
        return False, samples
    if inclination(p_i, p_j) >= params.max_inclination:
        return False, samples
    try:
        pca_plane(samples)
    except PlaneFitError:
        return False, samples
    return True, samples


def edge_risk(p_i, p_j, samples, params: TrgParams) -> float:
    """Direction-aware risk weight in [0, 1] from the plane fitted to ``samples``."""
    _, V, _ = pca_plane(samples)
    d = np.array([p_j[0] - p_i[0], p_j[1] - p_i[1]], dtype=np.float64)
    d /= np.hypot(d[0], d[1])
    a = V[:, 0]
    b = V[:, 1]
    if abs(a[0] * d[0] + a[1] * d[1]) >= abs(b[0] * d[0] + b[1] * d[1]):
        e_lon, e_lat = a, b
    else:
        e_lon, e_lat = b, a
    # -e . g with g = (0, 0, -1) is e_z; the sign of an eigenvector is arbitrary
    r_lon = abs(e_lon[2])
    r_lat = abs(e_lat[2])
    w = params.gamma * r_lon + (1 - params.gamma) * r_lat
    return float(min(max(w, 0.0), 1.0))


def evaluate_edge(emap: ElevationMap, p_i, p_j, params: TrgParams):
    """Compiled equivalent of ``edge_feasible`` + ``edge_risk``: ``(feasible, weight)``."""
    code, w = K.eval_edge(emap.heights, emap.origin[0], emap.origin[1], emap.resolution,
                          float(p_i[0]), float(p_i[1]), float(p_i[2]),
                          float(p_j[0]), float(p_j[1]), float(p_j[2]),
                          params.r_robot, params.h_max, params.r_robot, params.gamma,
                          params.min_plane_samples)
    if code == K.EDGE_DEGENERATE:
        from .elevation import DegenerateEdgeError
        raise DegenerateEdgeError("edge endpoints coincide in xy")
    return code == K.EDGE_OK, float(w)


def evaluate_edges(emap: ElevationMap, Pi, Pj, params: TrgParams):
    """Vectorised :func:`evaluate_edge` over ``(m, 3)`` endpoint arrays; returns codes and weights."""
    Pi = np.ascontiguousarray(Pi, dtype=np.float64).reshape(-1, 3)
    Pj = np.ascontiguousarray(Pj, dtype=np.float64).reshape(-1, 3)
    return K.eval_edges(emap.heights, emap.origin[0], emap.origin[1], emap.resolution, Pi, Pj,
                        params.r_robot, params.h_max, params.r_robot, params.gamma,
                        params.min_plane_samples)


# -- graph storage ----------------------------------------------------------------

class TrgGraph:
    """Undirected graph of terrain nodes with risk-weighted edges.

    Mutations go through ``add_node``/``add_edge``/``remove_*``; wrap a batch
    in ``with graph.writing():`` so that :meth:`snapshot` never observes a
    half-applied batch.
    """

    def __init__(self, params: TrgParams | None = None):
        self.params = params or TrgParams()
        self._pos = np.zeros((256, 3))
        self._state = np.zeros(256, dtype=np.int8)
        self._alive = np.zeros(256, dtype=bool)
        self._n = 0
        self.adj: list[dict[int, int]] = []
        self._eu = np.zeros(1024, dtype=np.int64)
        self._ev = np.zeros(1024, dtype=np.int64)
        self._ed = np.zeros(1024)
        self._ew = np.zeros(1024)
        self._ealive = np.zeros(1024, dtype=bool)
        self._m = 0
        self.n_nodes = 0
        self.n_edges = 0
        self.index = GridIndex(0.5 * self.params.r_exp)
        self.lock = threading.RLock()
        self.version = 0
        self._snap = None

    # storage helpers
    @staticmethod
    def _grow(arr, need):
        if need <= len(arr):
            return arr
        new = np.zeros((max(need, 2 * len(arr)),) + arr.shape[1:], dtype=arr.dtype)
        new[:len(arr)] = arr
        return new

    def _touch(self):
        self.version += 1
        self._snap = None

    @contextmanager
    def writing(self):
        with self.lock:
            yield self
            self._touch()

    # nodes
    def add_node(self, xyz, state=NodeState.VALID, nid: int | None = None) -> int:
        with self.lock:
            if nid is None:
                nid = self._n
            if nid >= self._n:
                need = nid + 1
                if need > len(self._pos):
                    self._pos = self._grow(self._pos, need)
                    self._state = self._grow(self._state, need)
                    self._alive = self._grow(self._alive, need)
                self.adj.extend({} for _ in range(need - self._n))
                self._n = need
            elif self._alive[nid]:
                raise ValueError(f"node {nid} already exists")
            self._pos[nid] = xyz
            self._state[nid] = int(state)
            self._alive[nid] = True
            self.n_nodes += 1
            self.index.insert(nid, float(xyz[0]), float(xyz[1]))
            self._touch()
            return nid

    def remove_node(self, nid: int) -> None:
        with self.lock:
            for eid in list(self.adj[nid].values()):
                self.remove_edge(eid)
            self._alive[nid] = False
            self.index.remove(nid)
            self.n_nodes -= 1
            self._touch()

    def has_node(self, nid: int) -> bool:
        return 0 <= nid < self._n and bool(self._alive[nid])

    def node_ids(self) -> list[int]:
        return np.flatnonzero(self._alive[:self._n]).tolist()

    def position(self, nid: int) -> np.ndarray:
        return self._pos[nid]

    def set_position(self, nid: int, xyz) -> None:
        with self.lock:
            self._pos[nid] = xyz
            self.index.insert(nid, float(xyz[0]), float(xyz[1]))
            self._touch()

    def state(self, nid: int) -> NodeState:
        return NodeState(int(self._state[nid]))

    def set_state(self, nid: int, state: NodeState) -> None:
        if self._state[nid] != int(state):
            self._state[nid] = int(state)
            self._touch()

    def degree(self, nid: int) -> int:
        return len(self.adj[nid])

    def node(self, nid: int) -> TrgNode:
        if not self.has_node(nid):
            raise KeyError(nid)
        return TrgNode(nid, tuple(float(v) for v in self._pos[nid]), self.state(nid),
                       frozenset(self.adj[nid].values()))

    @property
    def positions(self) -> np.ndarray:
        """``(capacity, 3)`` positions indexed by node id (dead slots included)."""
        return self._pos[:self._n]

    @property
    def states(self) -> np.ndarray:
        return self._state[:self._n]

    @property
    def alive(self) -> np.ndarray:
        return self._alive[:self._n]

    @property
    def id_bound(self) -> int:
        return self._n

    # edges
    def add_edge(self, i: int, j: int, dist: float, weight: float) -> int:
        if i == j:
            raise ValueError("self loops are not allowed")
        if not (self.has_node(i) and self.has_node(j)):
            raise KeyError((i, j))
        if j in self.adj[i]:
            raise ValueError(f"edge {i}-{j} already exists")
        with self.lock:
            eid = self._m
            need = eid + 1
            if need > len(self._eu):
                self._eu = self._grow(self._eu, need)
                self._ev = self._grow(self._ev, need)
                self._ed = self._grow(self._ed, need)
                self._ew = self._grow(self._ew, need)
                self._ealive = self._grow(self._ealive, need)
            self._eu[eid] = min(i, j)
            self._ev[eid] = max(i, j)
            self._ed[eid] = dist
            self._ew[eid] = weight
            self._ealive[eid] = True
            self._m = need
            self.adj[i][j] = eid
            self.adj[j][i] = eid
            self.n_edges += 1
            self._touch()
            return eid

    def remove_edge(self, eid: int) -> None:
        with self.lock:
            i, j = int(self._eu[eid]), int(self._ev[eid])
            del self.adj[i][j]
            del self.adj[j][i]
            self._ealive[eid] = False
            self.n_edges -= 1
            self._touch()

    def set_edge(self, eid: int, dist: float, weight: float) -> None:
        if self._ed[eid] != dist or self._ew[eid] != weight:
            self._ed[eid] = dist
            self._ew[eid] = weight
            self._touch()

    def edge_between(self, i: int, j: int) -> int | None:
        return self.adj[i].get(j)

    def edge(self, eid: int) -> TrgEdge:
        if not (0 <= eid < self._m and self._ealive[eid]):
            raise KeyError(eid)
        return TrgEdge(eid, int(self._eu[eid]), int(self._ev[eid]), float(self._ed[eid]), float(self._ew[eid]))

    def edge_ids(self) -> list[int]:
        return np.flatnonzero(self._ealive[:self._m]).tolist()

    def edge_arrays(self):
        """``(u, v, dist, weight)`` arrays of live edges in edge-id order."""
        live = self._ealive[:self._m]
        return self._eu[:self._m][live], self._ev[:self._m][live], self._ed[:self._m][live], self._ew[:self._m][live]

    # whole-graph views
    def nodes_within(self, xy, r: float) -> list[int]:
        return [nid for nid, _ in self.index.within(float(xy[0]), float(xy[1]), r)]

    def snapshot(self) -> "GraphSnapshot":
        with self.lock:
            if self._snap is None:
                self._snap = GraphSnapshot.from_graph(self)
            return self._snap

    def copy(self) -> "TrgGraph":
        return graph_from_dict(graph_to_dict(self))

    def check_invariants(self) -> None:
        """Raise AssertionError if storage, adjacency and index disagree."""
        alive = set(self.node_ids())
        assert self.index.ids() == alive, "spatial index out of sync with node set"
        assert len(alive) == self.n_nodes
        seen = 0
        for eid in self.edge_ids():
            i, j = int(self._eu[eid]), int(self._ev[eid])
            assert i in alive and j in alive, f"edge {eid} has a missing endpoint"
            assert self.adj[i].get(j) == eid and self.adj[j].get(i) == eid
            seen += 1
        assert seen == self.n_edges
        assert sum(len(self.adj[i]) for i in alive) == 2 * seen
        for i in alive:
            if self._state[i] != NodeState.INVALID:
                assert self.adj[i], f"node {i} is Valid with no edges"


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """Immutable CSR view of a graph for planning.

    Arrays are indexed by node id; dead ids have no adjacency and state
    INVALID.  ``slot_edge`` maps each CSR slot back to the edge id.
    """

    params: TrgParams
    pos: np.ndarray
    state: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    dist: np.ndarray
    weight: np.ndarray
    slot_edge: np.ndarray
    version: int

    @classmethod
    def from_graph(cls, g: TrgGraph) -> "GraphSnapshot":
        n = g.id_bound
        live = np.flatnonzero(g._ealive[:g._m])
        u = g._eu[live]
        v = g._ev[live]
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        eid = np.concatenate([live, live])
        order = np.lexsort((dst, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        state = np.where(g.alive, g.states, NodeState.INVALID).astype(np.int8)
        arrays = dict(pos=g.positions.copy(), state=state, indptr=indptr,
                      indices=dst.astype(np.int64), dist=g._ed[eid].copy(), weight=g._ew[eid].copy(),
                      slot_edge=eid.astype(np.int64))
        for a in arrays.values():
            a.setflags(write=False)
        return cls(params=g.params, version=g.version, **arrays)

    @property
    def n(self) -> int:
        return len(self.state)

    @property
    def usable(self) -> np.ndarray:
        return self.state != NodeState.INVALID

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def slot(self, i: int, j: int) -> int:
        nb = self.neighbors(i)
        k = int(np.searchsorted(nb, j))
        if k >= len(nb) or nb[k] != j:
            raise KeyError((i, j))
        return int(self.indptr[i]) + k

    def nearest(self, xy, max_r: float, mask=None):
        """Nearest node id within ``max_r`` in xy among ``mask`` (default usable), or None."""
        mask = self.usable if mask is None else mask
        ids = np.flatnonzero(mask)
        if len(ids) == 0:
            return None
        d = np.hypot(self.pos[ids, 0] - xy[0], self.pos[ids, 1] - xy[1])
        k = int(np.argmin(d))  # first minimum == smallest id on ties
        if d[k] > max_r:
            return None
        return int(ids[k])


# -- JSON ------------------------------------------------------------------------

def graph_to_dict(g: TrgGraph) -> dict:
    nodes = []
    for nid in g.node_ids():
        x, y, z = (float(v) for v in g._pos[nid])
        nodes.append({"id": nid, "x": x, "y": y, "z": z, "state": g.state(nid).label})
    edges = []
    for eid in g.edge_ids():
        edges.append({"from": int(g._eu[eid]), "to": int(g._ev[eid]),
                      "dist": float(g._ed[eid]), "weight": float(g._ew[eid])})
    return {"format": "trg-graph", "version": 1, "params": g.params.to_dict(),
            "nodes": nodes, "edges": edges}


def graph_from_dict(d: dict) -> TrgGraph:
    if d.get("format") != "trg-graph":
        raise ValueError("not a trg-graph document")
    g = TrgGraph(TrgParams.from_dict(d.get("params", {})))
    for nd in d["nodes"]:
        g.add_node((nd["x"], nd["y"], nd["z"]), NodeState.parse(nd["state"]), nid=int(nd["id"]))
    for ed in d["edges"]:
        g.add_edge(int(ed["from"]), int(ed["to"]), float(ed["dist"]), float(ed["weight"]))
    return g


def dumps_graph(g: TrgGraph) -> str:
    # repr floats are the shortest strings that round-trip exactly
    return json.dumps(graph_to_dict(g), indent=1) + "\n"


def save_graph(g: TrgGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_graph(g))


def load_graph(path) -> TrgGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))
