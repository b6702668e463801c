"""Kinematic pure-pursuit follower with an inclination-driven slip model.

The robot is a point with a heading.  Each step it steers towards the path
point one lookahead ahead of its projected progress, moves ``speed * dt``,
and receives a lateral kick drawn from ``N(0, (slip_k * sin(incl))**2)``
where ``incl`` is the local fitted-plane inclination.  When the target lies
behind it turns in place.  The slip model is an invented stand-in for real
locomotion and is the only deliberately unphysical part of the simulator.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import _kernels as K
from ..construct import make_rng
from ..core import TrgParams, check_stability
from ..elevation import ElevationMap

FAILURE_REASONS = ("instability", "stuck", "off_path")


@dataclass(frozen=True)
class FollowerParams:
    speed: float = 0.5
    dt: float = 0.1
    lookahead: float = 0.5
    max_yaw_rate: float = 1.5
    slip_k: float = 0.05
    arrive_tol: float = 0.05
    stall_timeout: float = 10.0
    max_offpath: float = 1.0
    time_factor: float = 4.0  # hard cap: time_factor * path_length / speed + stall_timeout

    def __post_init__(self):
        for name in ("speed", "dt", "lookahead", "max_yaw_rate", "arrive_tol", "stall_timeout", "max_offpath"):
            if not getattr(self, name) > 0:
                raise ValueError(f"follower {name} must be > 0")
        if self.slip_k < 0:
            raise ValueError("follower slip_k must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "FollowerParams":
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraversalResult:
    success: bool
    L_trav: float
    trace: np.ndarray = field(default_factory=lambda: np.empty((0, 4)))  # x, y, z, heading
    failure_reason: str | None = None
    duration: float = 0.0


class _Track:
    """Arc-length parametrised xy polyline."""

    def __init__(self, xy):
        P = np.asarray(xy, dtype=np.float64)
        keep = np.concatenate([[True], np.hypot(*np.diff(P, axis=0).T) > 1e-12])
        self.P = P[keep]
        seg = np.hypot(*np.diff(self.P, axis=0).T)
        self.s = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.s[-1])

    def point(self, s):
        s = min(max(s, 0.0), self.length)
        return np.array([np.interp(s, self.s, self.P[:, 0]), np.interp(s, self.s, self.P[:, 1])])

    def project(self, q, s_lo, s_hi):
        """Closest point among segments overlapping arc interval [s_lo, s_hi]: (s, distance)."""
        P, S = self.P, self.s
        if len(P) == 1:
            return 0.0, float(np.hypot(*(q - P[0])))
        a = max(0, int(np.searchsorted(S, s_lo, side="right")) - 1)
        b = min(len(P) - 1, int(np.searchsorted(S, s_hi, side="left")) + 1)
        best = (0.0, math.inf)
        for k in range(a, b):
            p0, p1 = P[k], P[k + 1]
            d = p1 - p0
            L2 = float(d @ d)
            t = 0.0 if L2 == 0 else min(1.0, max(0.0, float((q - p0) @ d) / L2))
            dist = float(np.hypot(*(p0 + t * d - q)))
            if dist < best[1]:
                best = (S[k] + t * (S[k + 1] - S[k]), dist)
        return best

    def distance(self, q):
        return self.project(q, 0.0, self.length)[1]


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def simulate_traversal(emap: ElevationMap, result, follower: FollowerParams | None = None, seed=0,
                       params: TrgParams | None = None, start_heading: float | None = None) -> TraversalResult:
    """Follow ``result.waypoints`` (or an (N,3) array) and report what happened."""
    fp = follower or FollowerParams()
    params = params or TrgParams()
    wps = np.asarray(getattr(result, "waypoints", result), dtype=np.float64).reshape(-1, 3)
    if len(wps) == 0:
        raise ValueError("empty waypoint path")
    rng = make_rng(seed)
    track = _Track(wps[:, :2])
    goal = track.P[-1]
    pos = track.P[0].copy()
    if start_heading is None:
        d = track.point(fp.lookahead) - pos
        heading = math.atan2(d[1], d[0]) if d.any() else 0.0
    else:
        heading = float(start_heading)
    ok, z = check_stability(emap, pos, params)
    if not ok:
        return TraversalResult(False, 0.0, np.array([[pos[0], pos[1], math.nan, heading]]), "instability")
    trace = [(pos[0], pos[1], z, heading)]
    L = 0.0
    s_prog = 0.0
    best_remaining = track.length
    t_improve = 0.0
    t = 0.0
    t_max = fp.time_factor * track.length / fp.speed + fp.stall_timeout
    H, ox, oy, res = emap.heights, emap.origin[0], emap.origin[1], emap.resolution
    step = fp.speed * fp.dt
    reason = None
    while True:
        if math.hypot(*(goal - pos)) <= fp.arrive_tol:
            break
        if t >= t_max:
            reason = "stuck"
            break
        target = track.point(s_prog + fp.lookahead)
        to = target - pos
        dist_t = math.hypot(*to)
        alpha = _wrap(math.atan2(to[1], to[0]) - heading) if dist_t > 0 else 0.0
        if abs(alpha) > math.pi / 2:
            heading = _wrap(heading + math.copysign(min(abs(alpha), fp.max_yaw_rate * fp.dt), alpha))
            move = np.zeros(2)
        else:
            omega = fp.speed * 2.0 * math.sin(alpha) / max(dist_t, 1e-9)
            omega = max(-fp.max_yaw_rate, min(fp.max_yaw_rate, omega))
            if dist_t <= step and s_prog + fp.lookahead >= track.length:
                move = to.copy()  # final approach: land on the goal
                heading = math.atan2(to[1], to[0]) if dist_t > 0 else heading
            else:
                heading = _wrap(heading + omega * fp.dt)
                move = step * np.array([math.cos(heading), math.sin(heading)])
        sine = K.disk_plane_sine(H, ox, oy, res, pos[0], pos[1], params.r_robot)
        sigma = fp.slip_k * (sine if math.isfinite(sine) else 0.0)
        kick = rng.normal(0.0, 1.0) * sigma
        move = move + kick * np.array([-math.sin(heading), math.cos(heading)])
        new = pos + move
        t += fp.dt
        if not emap.in_bounds(*new):
            reason = "instability"
            pos = new
            trace.append((pos[0], pos[1], math.nan, heading))
            break
        ok, z_new = check_stability(emap, new, params)
        if not ok:
            reason = "instability"
            pos = new
            trace.append((pos[0], pos[1], math.nan, heading))
            break
        L += math.sqrt(float(move @ move) + (z_new - z) ** 2)
        pos, z = new, z_new
        trace.append((pos[0], pos[1], z, heading))
        s_new, off = track.project(pos, s_prog - fp.lookahead, s_prog + 2 * fp.lookahead)
        if off > fp.max_offpath:
            reason = "off_path"
            break
        s_prog = max(s_prog, s_new)
        remaining = track.length - s_prog + math.hypot(*(goal - pos)) * (s_prog >= track.length)
        if remaining < best_remaining - 0.05:
            best_remaining = remaining
            t_improve = t
        elif t - t_improve > fp.stall_timeout:
            reason = "stuck"
            break
    success = reason is None and math.hypot(*(goal - pos)) <= params.r_robot
    return TraversalResult(success, L, np.array(trace, dtype=np.float64), reason, t)
