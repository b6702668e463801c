"""Wavefront construction of the traversal risk graph.

Starting from a reference node, candidate positions are drawn on a ring of
radius ``r_exp`` around the node at the head of a FIFO queue.  Each candidate
is discarded (unstable), merged into an existing node closer than
``r_robot``, or added as a new node wired to the reference and to every
node within ``r_exp``.  Added nodes join the queue; construction stops when
the queue drains.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import NodeState, TrgGraph, TrgParams, check_stability, evaluate_edge
from .elevation import ElevationMap


INVALID = int(NodeState.INVALID)


class StartNotStandable(ValueError):
    pass


@dataclass(frozen=True)
class Discard:
    pass


@dataclass(frozen=True)
class Merge:
    node: int


@dataclass(frozen=True)
class Add:
    node: int


SampleOutcome = Discard | Merge | Add


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; child streams come from ``SeedSequence.spawn``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample_ring(center, r_exp: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` points at distance ``r_exp`` from ``center`` with uniform angles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return np.column_stack((center[0] + r_exp * np.cos(theta), center[1] + r_exp * np.sin(theta)))


@dataclass(frozen=True)
class Region:
    """Disk limiting where nodes may be created (e.g. the sensed local map)."""

    center: tuple[float, float]
    radius: float

    def contains(self, x, y) -> bool:
        return (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 <= self.radius ** 2


class Expander:
    """Shared state for one run of the expansion loop."""

    def __init__(self, graph: TrgGraph, emap: ElevationMap, rng, region: Region | None = None):
        self.graph = graph
        self.emap = emap
        self.params = graph.params
        self.rng = rng
        self.region = region
        self.queue: deque[int] = deque()
        self.queued: set[int] = set()
        self.failed: set[tuple[int, int]] = set()
        self.added: list[int] = []

    def push(self, nid: int) -> None:
        if nid not in self.queued:
            self.queue.append(nid)
            self.queued.add(nid)

    def wire(self, i: int, j: int) -> bool:
        g = self.graph
        if j in g.adj[i]:
            return True
        key = (i, j) if i < j else (j, i)
        if key in self.failed:
            return False
        pi = g.position(i)
        pj = g.position(j)
        if math.hypot(pj[0] - pi[0], pj[1] - pi[1]) < self.emap.resolution:
            self.failed.add(key)
            return False
        states = g.states
        for k in (i, j):
            if states[k] == INVALID and not check_stability(self.emap, g.position(k)[:2], self.params)[0]:
                self.failed.add(key)
                return False
        ok, w = evaluate_edge(self.emap, pi, pj, self.params)
        if not ok:
            self.failed.add(key)
            return False
        g.add_edge(i, j, math.dist(pi, pj), w)
        for k in (i, j):
            if states[k] == INVALID:
                g.set_state(k, NodeState.VALID)
        return True

    def classify(self, sample_xy, v_ref: int) -> SampleOutcome:
        g = self.graph
        p = self.params
        x, y = float(sample_xy[0]), float(sample_xy[1])
        if self.region is not None and not self.region.contains(x, y):
            return Discard()
        stable, med = check_stability(self.emap, (x, y), p)
        if not stable:
            return Discard()
        near = g.index.nearest(x, y, p.r_robot)
        if near is not None:
            self.wire(v_ref, near[0])
            return Merge(near[0])
        nid = g.add_node((x, y, med), NodeState.VALID)
        self.wire(v_ref, nid)
        for other, _ in g.index.within(x, y, p.r_exp):
            if other != nid and other != v_ref:
                self.wire(nid, other)
        if g.degree(nid) == 0:
            g.remove_node(nid)
            return Discard()
        self.added.append(nid)
        self.push(nid)
        return Add(nid)

    def run(self) -> list[int]:
        g = self.graph
        n = self.params.samples_per_expansion
        while self.queue:
            ref = self.queue.popleft()
            if not g.has_node(ref):
                continue
            for s in sample_ring(g.position(ref), self.params.r_exp, self.rng, n):
                self.classify(s, ref)
        return self.added


def classify_sample(graph: TrgGraph, emap: ElevationMap, sample_xy, v_ref: int,
                    params: TrgParams | None = None, rng=None) -> SampleOutcome:
    """Apply the discard / merge / add rule to one sampled position."""
    if params is not None and params != graph.params:
        raise ValueError("params differ from the graph's parameters")
    if not graph.has_node(v_ref):
        raise KeyError(v_ref)
    with graph.writing():
        return Expander(graph, emap, rng).classify(sample_xy, v_ref)


def expand(graph: TrgGraph, emap: ElevationMap, seeds, rng, region: Region | None = None) -> list[int]:
    """Run the wavefront loop with ``seeds`` as the initial queue; returns new node ids."""
    ex = Expander(graph, emap, rng, region)
    for nid in seeds:
        ex.push(nid)
    with graph.writing():
        return ex.run()


def build_trg(emap: ElevationMap, p_start, params: TrgParams | None = None, seed: int = 0,
              region: Region | None = None) -> TrgGraph:
    params = params or TrgParams()
    stable, med = check_stability(emap, p_start, params)
    if not stable:
        raise StartNotStandable("start not standable")
    graph = TrgGraph(params)
    start = graph.add_node((float(p_start[0]), float(p_start[1]), med), NodeState.INVALID)
    expand(graph, emap, [start], make_rng(seed), region)
    return graph
