"""Per-trial metrics: traveled path deviation T and normalized path risk W."""
from __future__ import annotations


def deviation(L_trav: float, L_path: float) -> float:
    """``max(0, (L_trav - L_path) / L_trav)``; negative excess counts as zero."""
    if not L_trav > 0:
        raise ValueError("L_trav must be > 0")
    return max(0.0, (L_trav - L_path) / L_trav)


def normalized_risk(weights, L_path: float) -> float:
    if not L_path > 0:
        raise ValueError("L_path must be > 0")
    return float(sum(weights)) / L_path


def compute_metrics(plan, trav=None) -> tuple[float | None, float]:
    """``(T, W)`` for a plan and, optionally, its traversal.

    T is None unless the traversal succeeded.
    """
    if not plan.ok or len(plan.node_path) == 0:
        raise ValueError("metrics need a successful plan")
    W = normalized_risk(plan.edge_w, plan.L_path)
    T = None
    if trav is not None and trav.success:
        T = deviation(trav.L_trav, plan.L_path)
    return T, W
