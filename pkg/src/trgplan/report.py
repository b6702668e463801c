"""Figures: terrain + graph + path renders and benchmark charts.

SVG output is made reproducible by fixing matplotlib's hash salt and
dropping the creation date from the metadata.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

from .core import NodeState  # noqa: E402

STATE_COLORS = {NodeState.VALID: "#2ca02c", NodeState.FRONTIER: "#1f77b4", NodeState.INVALID: "#d62728"}
MISSING_COLOR = "#f5deb3"
PATH_COLOR = "#ff7f0e"
RASTER_EDGES_ABOVE = 20000


def _save(fig, out):
    out = str(out)
    fmt = out.rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt in ("svg", "pdf") else {}
    if fmt == "png":
        meta = {"Software": None}
    with plt.rc_context({"svg.hashsalt": "trgplan", "svg.fonttype": "none"}):
        fig.savefig(out, format=fmt, metadata=meta, dpi=150)
    plt.close(fig)


def render_scene(emap, graph=None, path=None, out="scene.svg", title: str | None = None, show_edges: bool = True):
    """Grayscale height shading, graph nodes colored by state, edges darker
    with higher risk, and the path as a thick polyline."""
    xmin, xmax, ymin, ymax = emap.extent
    w_in = 7.0
    h_in = max(2.0, w_in * (ymax - ymin) / max(xmax - xmin, 1e-9))
    fig, ax = plt.subplots(figsize=(w_in, min(h_in, 14.0)))
    H = np.ma.masked_invalid(emap.heights)
    cmap = plt.get_cmap("gray").copy()
    cmap.set_bad(MISSING_COLOR)
    lo = float(H.min()) if H.count() else 0.0
    hi = float(H.max()) if H.count() else 1.0
    if hi <= lo:
        hi = lo + 1.0
    ax.imshow(H, origin="lower", extent=(xmin, xmax, ymin, ymax), cmap=cmap, vmin=lo, vmax=hi,
              interpolation="nearest")
    if graph is not None:
        pos = graph.positions if hasattr(graph, "positions") else graph.pos
        if show_edges:
            u, v, _, w = graph.edge_arrays()
            if len(u):
                segs = np.stack([pos[u, :2], pos[v, :2]], axis=1)
                rgba = np.zeros((len(u), 4))
                rgba[:, 2] = 0.6
                rgba[:, 3] = 0.15 + 0.85 * np.clip(w, 0.0, 1.0)
                lc = LineCollection(segs, colors=rgba, linewidths=0.4, zorder=2)
                lc.set_rasterized(len(u) > RASTER_EDGES_ABOVE)
                ax.add_collection(lc)
        ids = graph.node_ids() if hasattr(graph, "node_ids") else np.arange(len(pos))
        ids = np.asarray(ids, dtype=np.int64)
        states = graph.states[ids]
        size = 4.0 if len(ids) > 2000 else 14.0
        for st, col in STATE_COLORS.items():
            m = states == int(st)
            if m.any():
                sc = ax.scatter(pos[ids[m], 0], pos[ids[m], 1], s=size, c=col, edgecolors="none", zorder=3,
                                label=st.label)
                sc.set_rasterized(len(ids) > RASTER_EDGES_ABOVE)
        ax.legend(loc="upper right", fontsize=7, markerscale=2)
    if path is not None and len(path):
        P = np.asarray(path, dtype=np.float64).reshape(len(path), -1)
        ax.plot(P[:, 0], P[:, 1], color=PATH_COLOR, linewidth=2.0, zorder=4)
        ax.plot(P[[0, -1], 0], P[[0, -1], 1], "o", color=PATH_COLOR, markersize=5, zorder=5)
    ax.set_xlim(xmin, xmax)
    ax.set_ylim(ymin, ymax)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    _save(fig, out)


def plot_benchmark(report, out_dir, fmt: str = "svg") -> list[str]:
    """Success-rate bars and T/W means per class and planner."""
    from pathlib import Path

    summary = report["summary"] if isinstance(report, dict) else report.summary
    classes = list(dict.fromkeys(s["class"] for s in summary))
    planners = list(dict.fromkeys(s["planner"] for s in summary))
    by = {(s["class"], s["planner"]): s for s in summary}
    x = np.arange(len(classes))
    width = 0.8 / max(len(planners), 1)
    out = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6), sharey=True)
    for ax, key in zip(axes, ("S_path", "S_trav")):
        for k, p in enumerate(planners):
            vals = [by[(c, p)][key] if (c, p) in by else 0.0 for c in classes]
            ax.bar(x + (k - (len(planners) - 1) / 2) * width, vals, width, label=p)
        ax.set_xticks(x, classes)
        ax.set_ylim(0, 1.05)
        ax.set_title(key)
    axes[0].set_ylabel("rate")
    axes[1].legend(fontsize=7, loc="lower right")
    path = str(Path(out_dir) / f"success_rates.{fmt}")
    _save(fig, path)
    out.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    for ax, key in zip(axes, ("T", "W")):
        for k, p in enumerate(planners):
            m = [by.get((c, p), {}).get(f"{key}_mean") for c in classes]
            s = [by.get((c, p), {}).get(f"{key}_std") for c in classes]
            m = [np.nan if v is None else v for v in m]
            s = [0.0 if v is None else v for v in s]
            ax.bar(x + (k - (len(planners) - 1) / 2) * width, m, width, yerr=s, capsize=2, label=p)
        ax.set_xticks(x, classes)
        ax.set_title(f"mean {key} (successful trials)")
    axes[1].legend(fontsize=7)
    path = str(Path(out_dir) / f"metrics.{fmt}")
    _save(fig, path)
    out.append(path)
    return out
