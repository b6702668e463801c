"""Hierarchical maintenance of a traversal risk graph around the robot.

One update cycle is

1. ``update_local``: take the nodes within ``r_local`` of the robot, flag
   frontier nodes, re-test stability of the others and re-evaluate edges
   between the stable local nodes;
2. ``expand_from_frontiers``: grow the graph from the frontier nodes,
   restricted to the local map disk;
3. ``integrate``: refresh frontier flags over the touched nodes, enforce the
   node-state invariants and publish a new version for planners.

The graph is mutated in place under its write lock, so the global graph is
always the union of the untouched nodes and the refreshed local set.
Planners read ``graph.snapshot()``, which is rebuilt only after a write batch
completes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .construct import Expander, Region, make_rng
from .core import NodeState, TrgGraph, TrgParams, check_stability, evaluate_edges
from .elevation import ElevationMap

INVALID = int(NodeState.INVALID)
VALID = int(NodeState.VALID)
FRONTIER = int(NodeState.FRONTIER)


@dataclass(frozen=True)
class LocalUpdateParams:
    r_local: float = 5.0

    def check(self, params: TrgParams) -> None:
        if self.r_local < params.r_exp:
            raise ValueError(f"r_local ({self.r_local}) must be >= r_exp ({params.r_exp})")


@dataclass
class LocalChanges:
    """What one update cycle did to the graph."""

    p_cur: tuple[float, float]
    local: set[int]
    frontiers: list[int]
    changed: set[int] = field(default_factory=set)
    removed_edges: list[tuple[int, int]] = field(default_factory=list)
    new_nodes: list[int] = field(default_factory=list)

    def empty(self) -> bool:
        return not (self.changed or self.removed_edges or self.new_nodes)


def covered(graph: TrgGraph, xy) -> bool:
    """Whether ``xy`` lies in the area covered by the graph's nodes."""
    return graph.index.any_within(float(xy[0]), float(xy[1]), graph.params.cover_r)


def probe_point(p_i, p_cur, r_robot):
    dx = p_i[0] - p_cur[0]
    dy = p_i[1] - p_cur[1]
    n = math.hypot(dx, dy)
    if n == 0:
        return None
    return (p_i[0] + 2 * r_robot * dx / n, p_i[1] + 2 * r_robot * dy / n)


def extract_local(graph: TrgGraph, p_cur, params: LocalUpdateParams | float) -> set[int]:
    r = params.r_local if isinstance(params, LocalUpdateParams) else float(params)
    return set(graph.nodes_within(p_cur, r))


def frontier_check(graph: TrgGraph, node_id: int, p_cur, params: TrgParams | None = None) -> bool:
    """True when the node is not Invalid and its outward probe point is uncovered."""
    params = params or graph.params
    if graph.states[node_id] == INVALID:
        return False
    p_out = probe_point(graph.position(node_id), p_cur, params.r_robot)
    if p_out is None:
        return False
    return not graph.index.any_within(p_out[0], p_out[1], params.cover_r)


def update_local(graph: TrgGraph, emap: ElevationMap, p_cur, params: TrgParams | None = None,
                 local_params: LocalUpdateParams | None = None) -> LocalChanges:
    params = params or graph.params
    local_params = local_params or LocalUpdateParams()
    local_params.check(params)
    p_cur = (float(p_cur[0]), float(p_cur[1]))
    local = extract_local(graph, p_cur, local_params)
    frontiers = sorted(i for i in local if frontier_check(graph, i, p_cur, params))
    fset = set(frontiers)
    ch = LocalChanges(p_cur, local, frontiers)
    with graph.writing():
        stable = {}
        for i in sorted(local):
            if i in fset:
                stable[i] = True
                continue
            ok, med = check_stability(emap, graph.position(i)[:2], params)
            stable[i] = ok
            if ok and graph.position(i)[2] != med:
                p = graph.position(i).copy()
                p[2] = med
                graph.set_position(i, p)
                ch.changed.add(i)

        touched = set()
        # nodes that failed stability lose every edge
        for i in sorted(local):
            if not stable[i]:
                for j, eid in sorted(graph.adj[i].items()):
                    graph.remove_edge(eid)
                    ch.removed_edges.append((min(i, j), max(i, j)))
                    touched.update((i, j))

        eids = sorted({eid for i in local if stable[i] for j, eid in graph.adj[i].items()
                       if j in local and stable[j]})
        if eids:
            eu = graph._eu[eids]
            ev = graph._ev[eids]
            pos = graph.positions
            codes, weights = evaluate_edges(emap, pos[eu], pos[ev], params)
            for k, eid in enumerate(eids):
                i, j = int(eu[k]), int(ev[k])
                dist = math.dist(pos[i], pos[j])
                if codes[k] != K.EDGE_OK:
                    graph.remove_edge(eid)
                    ch.removed_edges.append((i, j))
                    touched.update((i, j))
                elif graph._ew[eid] != weights[k] or graph._ed[eid] != dist:
                    graph.set_edge(eid, dist, float(weights[k]))
                    touched.update((i, j))

        # retained Invalid nodes that are standable again try to re-attach
        ex = Expander(graph, emap, rng=None)
        for i in sorted(local):
            if stable[i] and graph.degree(i) == 0:
                for j, _ in graph.index.within(*graph.position(i)[:2], params.r_exp):
                    if j != i and j in local and stable[j]:
                        if ex.wire(i, j):
                            touched.update((i, j))

        for i in sorted(local | touched):
            old = int(graph.states[i])
            ok = stable.get(i, old != INVALID)
            new = int(NodeState.VALID) if ok and graph.degree(i) > 0 else INVALID
            if new == VALID and i in fset:
                new = FRONTIER
            if (old == INVALID) != (new == INVALID):
                ch.changed.add(i)
            graph.set_state(i, NodeState(new))
        ch.changed |= touched
        ch.frontiers = [i for i in frontiers if graph.states[i] == FRONTIER]
    return ch


def expand_from_frontiers(graph: TrgGraph, emap: ElevationMap, frontiers, params: TrgParams | None = None,
                          seed=0, region: Region | None = None) -> list[int]:
    """Run the wavefront loop seeded with ``frontiers``; returns the new node ids."""
    params = params or graph.params
    frontiers = sorted(frontiers)
    if not frontiers:
        return []
    for f in frontiers:
        if graph.states[f] == INVALID:
            raise ValueError(f"frontier node {f} is Invalid")
    ex = Expander(graph, emap, make_rng(seed), region)
    for f in frontiers:
        ex.push(f)
    with graph.writing():
        return ex.run()


def integrate(graph: TrgGraph, changes: LocalChanges, params: TrgParams | None = None) -> LocalChanges:
    """Finish a cycle: recompute frontier flags over the local and new nodes and
    publish the result.  Removed edges and invalidated nodes are already
    reflected globally since the graph is shared.
    """
    params = params or graph.params
    with graph.writing():
        scope = sorted((changes.local | set(changes.new_nodes)) & set(graph.index.ids()))
        for i in scope:
            st = int(graph.states[i])
            if st == INVALID:
                continue
            if graph.degree(i) == 0:
                graph.set_state(i, NodeState.INVALID)
                changes.changed.add(i)
            elif frontier_check(graph, i, changes.p_cur, params):
                graph.set_state(i, NodeState.FRONTIER)
            else:
                graph.set_state(i, NodeState.VALID)
        changes.frontiers = [i for i in scope if graph.states[i] == FRONTIER]
    return changes


def update_cycle(graph: TrgGraph, emap: ElevationMap, p_cur, seed=0,
                 local_params: LocalUpdateParams | None = None, expand: bool = True) -> LocalChanges:
    """One full update: local refresh, frontier expansion inside the local disk, integration."""
    local_params = local_params or LocalUpdateParams()
    ch = update_local(graph, emap, p_cur, graph.params, local_params)
    if expand and ch.frontiers:
        region = Region((float(p_cur[0]), float(p_cur[1])), local_params.r_local)
        ch.new_nodes = expand_from_frontiers(graph, emap, ch.frontiers, graph.params, seed, region)
        ch.local |= set(ch.new_nodes)
    return integrate(graph, ch)
