"""Incremental bucket-grid index over 2D points.

Nodes arrive and leave one at a time during construction and updates, which
rules out static trees; a uniform hash grid keyed by ``floor(x / cell)``
gives O(1) insert/remove and radius queries that touch a handful of buckets.
"""
from __future__ import annotations

import math


class GridIndex:
    def __init__(self, cell_size: float):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.cell = float(cell_size)
        self._buckets: dict[tuple[int, int], list[tuple[int, float, float]]] = {}
        self._where: dict[int, tuple[int, int]] = {}

    def _key(self, x, y):
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def __len__(self):
        return len(self._where)

    def __contains__(self, nid):
        return nid in self._where

    def ids(self) -> set[int]:
        return set(self._where)

    def insert(self, nid: int, x: float, y: float) -> None:
        if nid in self._where:
            self.remove(nid)
        key = self._key(x, y)
        self._buckets.setdefault(key, []).append((nid, float(x), float(y)))
        self._where[nid] = key

    def remove(self, nid: int) -> None:
        key = self._where.pop(nid)
        bucket = [e for e in self._buckets[key] if e[0] != nid]
        if bucket:
            self._buckets[key] = bucket
        else:
            del self._buckets[key]

    def within(self, x: float, y: float, r: float) -> list[tuple[int, float]]:
        """``(id, distance)`` for every point with distance <= r, sorted by id."""
        reach = int(math.ceil(r / self.cell))
        kx, ky = self._key(x, y)
        r2 = r * r
        out = []
        buckets = self._buckets
        for bx in range(kx - reach, kx + reach + 1):
            for by in range(ky - reach, ky + reach + 1):
                bucket = buckets.get((bx, by))
                if bucket is None:
                    continue
                for nid, px, py in bucket:
                    dx = px - x
                    dy = py - y
                    d2 = dx * dx + dy * dy
                    if d2 <= r2:
                        out.append((nid, math.sqrt(d2)))
        out.sort()
        return out

    def nearest(self, x: float, y: float, max_r: float, accept=None):
        """Closest ``(id, distance)`` within ``max_r`` (ties to the smaller id), or None."""
        best = None
        for nid, d in self.within(x, y, max_r):
            if accept is not None and not accept(nid):
                continue
            if best is None or d < best[1]:
                best = (nid, d)
        return best

    def any_within(self, x: float, y: float, r: float, exclude: int | None = None) -> bool:
        reach = int(math.ceil(r / self.cell))
        kx, ky = self._key(x, y)
        r2 = r * r
        for bx in range(kx - reach, kx + reach + 1):
            for by in range(ky - reach, ky + reach + 1):
                for nid, px, py in self._buckets.get((bx, by), ()):
                    if nid != exclude and (px - x) ** 2 + (py - y) ** 2 <= r2:
                        return True
        return False
