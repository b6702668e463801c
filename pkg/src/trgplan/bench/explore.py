"""Goal-directed exploration: plan, move to a sub-goal, update, replan.

The graph starts as a local build around the robot.  While the goal is off
the graph the planner targets the frontier node nearest the goal; the robot
is moved there, one update cycle grows the graph inside the local disk, and
planning repeats.  The loop ends when a plan reaches the goal itself or no
progress is possible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..construct import Region, build_trg
from ..core import TrgGraph, TrgParams
from ..elevation import ElevationMap
from ..manage import LocalUpdateParams, update_cycle
from ..planning import PlanQuery, PlanResult, plan


@dataclass
class ExploreResult:
    success: bool
    cycles: int
    graph: TrgGraph
    plans: list[PlanResult] = field(default_factory=list)
    executed: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    reason: str | None = None


def explore_to_goal(emap: ElevationMap, start_xy, goal_xy, gamma: float = 3.0, params: TrgParams | None = None,
                    seed: int = 0, local_params: LocalUpdateParams | None = None, max_cycles: int = 100,
                    updates_per_subgoal: int = 1, smooth_window: int = 5) -> ExploreResult:
    params = params or TrgParams()
    local_params = local_params or LocalUpdateParams()
    p_cur = (float(start_xy[0]), float(start_xy[1]))
    graph = build_trg(emap, p_cur, params, seed, Region(p_cur, local_params.r_local))
    # a region build leaves every node Valid; one refresh flags the rim
    update_cycle(graph, emap, p_cur, seed=seed, local_params=local_params, expand=False)
    out = ExploreResult(False, 0, graph)
    legs = []
    last_target = None
    for cycle in range(max_cycles):
        out.cycles = cycle + 1
        res = plan(graph, PlanQuery(p_cur, goal_xy, gamma), smooth_window, emap)
        out.plans.append(res)
        if not res.ok:
            out.reason = "unreachable"
            break
        legs.append(res.waypoints)
        if not res.is_subgoal:
            out.success = True
            break
        target = res.node_path[-1]
        if target == last_target and len(res.node_path) == 1:
            out.reason = "no progress"
            break
        last_target = target
        p = graph.position(target)
        p_cur = (float(p[0]), float(p[1]))
        for k in range(updates_per_subgoal):
            update_cycle(graph, emap, p_cur, seed=seed + 7919 * (cycle + 1) + k, local_params=local_params)
    else:
        out.reason = "cycle budget"
    if legs:
        out.executed = np.vstack(legs)
    return out


def straight_line_gap(result: ExploreResult, goal_xy) -> float:
    if len(result.executed) == 0:
        return math.inf
    return math.dist(result.executed[-1, :2], goal_xy)
