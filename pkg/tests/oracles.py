"""Brute-force reference implementations used only by the tests.

Each one walks the definitions directly (every cell, every pair, every
node) with no shared code from the package beyond the map container.
"""
import heapq
import math

import numpy as np


def disk_scan(emap, cx, cy, r):
    out = []
    H = emap.heights
    for iy in range(H.shape[0]):
        for ix in range(H.shape[1]):
            x = emap.origin[0] + ix * emap.resolution
            y = emap.origin[1] + iy * emap.resolution
            if (x - cx) ** 2 + (y - cy) ** 2 <= r * r and not math.isnan(H[iy, ix]):
                out.append((x, y, H[iy, ix]))
    return sorted(out)


def ellipse_scan(emap, pi, pj, hw):
    mx, my = (pi[0] + pj[0]) / 2, (pi[1] + pj[1]) / 2
    d = math.hypot(pj[0] - pi[0], pj[1] - pi[1])
    ux, uy = (pj[0] - pi[0]) / d, (pj[1] - pi[1]) / d
    a, b = d / 2 + hw, hw
    out = []
    H = emap.heights
    for iy in range(H.shape[0]):
        for ix in range(H.shape[1]):
            x = emap.origin[0] + ix * emap.resolution
            y = emap.origin[1] + iy * emap.resolution
            s = ((x - mx) * ux + (y - my) * uy) / a
            t = (-(x - mx) * uy + (y - my) * ux) / b
            if s * s + t * t <= 1.0 and not math.isnan(H[iy, ix]):
                out.append((x, y, H[iy, ix]))
    return sorted(out)


def stable_oracle(emap, cx, cy, r_robot, h_max, min_samples):
    s = disk_scan(emap, cx, cy, r_robot)
    if not s:
        return False, None
    z = sorted(p[2] for p in s)
    n = len(z)
    med = z[n // 2] if n % 2 else 0.5 * (z[n // 2 - 1] + z[n // 2])
    return n >= min_samples and all(abs(v - med) < h_max for v in z), med


def risk_oracle(pi, pj, samples, gamma):
    """Edge weight straight from an eigen-decomposition of the sample covariance."""
    P = np.asarray(samples, dtype=float)
    Q = P - P.mean(axis=0)
    w, V = np.linalg.eig(Q.T @ Q / len(P))
    order = np.argsort(-w.real)
    V = V.real[:, order]
    d = np.array([pj[0] - pi[0], pj[1] - pi[1]])
    d /= np.linalg.norm(d)
    a, b = V[:, 0], V[:, 1]
    lon, lat = (a, b) if abs(a[:2] @ d) >= abs(b[:2] @ d) else (b, a)
    return min(1.0, max(0.0, gamma * abs(lon[2]) + (1 - gamma) * abs(lat[2])))


def dijkstra(n, edges, src):
    """Plain binary-heap Dijkstra over ``(u, v, cost)`` undirected edges."""
    adj = [[] for _ in range(n)]
    for u, v, c in edges:
        adj[u].append((v, c))
        adj[v].append((u, c))
    dist = [math.inf] * n
    dist[src] = 0.0
    pq = [(0.0, src)]
    while pq:
        d, u = heapq.heappop(pq)
        if d > dist[u]:
            continue
        for v, c in adj[u]:
            if d + c < dist[v]:
                dist[v] = d + c
                heapq.heappush(pq, (dist[v], v))
    return dist


def grid_dijkstra(free, res, start, goal):
    """8-connected shortest path cost on a boolean grid, (row, col) cells."""
    ny, nx = free.shape
    dist = {start: 0.0}
    pq = [(0.0, start)]
    while pq:
        d, (r, c) = heapq.heappop(pq)
        if (r, c) == goal:
            return d
        if d > dist.get((r, c), math.inf):
            continue
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                rr, cc = r + dr, c + dc
                if 0 <= rr < ny and 0 <= cc < nx and free[rr, cc]:
                    nd = d + res * (math.sqrt(2) if dr and dc else 1.0)
                    if nd < dist.get((rr, cc), math.inf):
                        dist[(rr, cc)] = nd
                        heapq.heappush(pq, (nd, (rr, cc)))
    return math.inf


def decode_pgm16(data: bytes):
    """Tiny P5 reader: header tokens by hand, samples as big-endian pairs."""
    tokens, i = [], 0
    while len(tokens) < 4:
        while data[i] in b" \t\r\n":
            i += 1
        if data[i] == ord("#"):
            while data[i] != ord("\n"):
                i += 1
            continue
        j = i
        while data[j] not in b" \t\r\n":
            j += 1
        tokens.append(data[i:j].decode())
        i = j
    i += 1
    w, h = int(tokens[1]), int(tokens[2])
    vals = [data[i + 2 * k] * 256 + data[i + 2 * k + 1] for k in range(w * h)]
    return [vals[r * w:(r + 1) * w] for r in range(h)]
