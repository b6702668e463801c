"""Benchmark sweep: scenarios x planners, traversal, metrics and aggregation.

Seeds all derive from ``master_seed``: the terrain (unless the terrain spec
pins its own), each class's scenario list, each trial's graph build and
traversal noise.  ``report.json`` and ``trials.csv`` carry no wall-clock
values so two runs with the same config are byte-identical; timings go to
``timing.json``.

Graph reuse: a graph built from one start covers the whole connected
standable region it can reach, so a trial reuses the first cached graph its
start attaches to and only builds a new one otherwise.  The PRM* roadmap is
built once per sample count, which is set to the node count of the graph
the trial used.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..construct import StartNotStandable, build_trg
from ..core import TrgGraph, TrgParams
from ..elevation import ElevationMap, load_map
from ..planning import STRATEGIES, PlanQuery, PlanResult, plan
from .baselines import PrmRoadmap, baseline_astar_grid
from .metrics import compute_metrics
from .scenarios import CLASSES, generate_scenarios
from .terrain import TerrainSpec, generate_terrain
from .traversal import FollowerParams, simulate_traversal

PLANNERS = ("trg", "astar", "prm")
TRIAL_FIELDS = ["class", "trial", "planner", "gamma", "path_ok", "is_subgoal", "trav_ok", "failure",
                "L_path", "L_trav", "T", "W", "dist_sum", "risk_sum", "n_graph_nodes",
                "start_x", "start_y", "goal_x", "goal_y"]


class ConfigError(ValueError):
    pass


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


@dataclass
class BenchConfig:
    master_seed: int = 0
    terrain: TerrainSpec | None = None
    map_path: str | None = None
    classes: tuple = ("short", "medium", "long")
    trials: int = 100
    planners: tuple = PLANNERS
    strategies: dict = field(default_factory=lambda: dict(STRATEGIES))
    params: TrgParams = field(default_factory=TrgParams)
    follower: FollowerParams = field(default_factory=FollowerParams)
    smooth_window: int = 5
    prm_samples: int | None = None  # None: match the trial's graph node count

    def __post_init__(self):
        if self.terrain is None and self.map_path is None:
            raise ConfigError("config needs 'terrain' or 'map'")
        for c in self.classes:
            if c not in CLASSES:
                raise ConfigError(f"unknown scenario class {c!r}")
        for p in self.planners:
            if p not in PLANNERS:
                raise ConfigError(f"unknown planner {p!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if "trg" in self.planners and not self.strategies:
            raise ConfigError("trg planner needs at least one strategy")
        for name, g in self.strategies.items():
            if not (isinstance(g, (int, float)) and g >= 0):
                raise ConfigError(f"strategy {name!r} needs a Gamma >= 0")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ConfigError("smooth_window must be an odd count >= 1")

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "BenchConfig":
        d = dict(d)
        known = {"master_seed", "terrain", "map", "classes", "trials", "planners", "strategies",
                 "params", "follower", "smooth_window", "prm_samples"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        try:
            kw = {}
            if "terrain" in d:
                kw["terrain"] = TerrainSpec.from_dict(d["terrain"])
            if "map" in d:
                p = Path(d["map"])
                kw["map_path"] = str(p if p.is_absolute() or base_dir is None else Path(base_dir) / p)
            for k in ("master_seed", "trials", "smooth_window", "prm_samples"):
                if k in d:
                    kw[k] = d[k]
            for k in ("classes", "planners"):
                if k in d:
                    kw[k] = tuple(d[k])
            if "strategies" in d:
                kw["strategies"] = dict(d["strategies"])
            if "params" in d:
                kw["params"] = TrgParams.from_dict(d["params"])
            if "follower" in d:
                kw["follower"] = FollowerParams.from_dict(d["follower"])
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"invalid benchmark config: {e}") from e

    @classmethod
    def load(cls, path) -> "BenchConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, Path(path).parent)

    def to_dict(self) -> dict:
        d = {"master_seed": self.master_seed, "classes": list(self.classes), "trials": self.trials,
             "planners": list(self.planners), "strategies": dict(self.strategies),
             "params": self.params.to_dict(), "follower": self.follower.to_dict(),
             "smooth_window": self.smooth_window, "prm_samples": self.prm_samples}
        if self.terrain is not None:
            d["terrain"] = self.terrain.to_dict()
        if self.map_path is not None:
            d["map"] = self.map_path
        return d

    def load_terrain(self) -> ElevationMap:
        if self.map_path is not None:
            return load_map(self.map_path)
        return generate_terrain(self.terrain)

    def labels(self) -> list[str]:
        out = []
        for p in self.planners:
            if p == "trg":
                out += [f"trg-{s}" for s in sorted(self.strategies, key=lambda s: (self.strategies[s], s))]
            else:
                out.append(p)
        return out


def _stats(values):
    v = [x for x in values if x is not None and math.isfinite(x)]
    if not v:
        return None, None
    return float(np.mean(v)), float(np.std(v))


@dataclass
class BenchReport:
    config: dict
    rows: list[dict]
    summary: list[dict]
    gamma_ordering: dict
    soft_checks: list[dict]
    graphs: list[dict]
    prm_samples: list[int] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"format": "trg-bench", "version": 1, "config": self.config, "summary": self.summary,
                "gamma_ordering": self.gamma_ordering, "soft_checks": self.soft_checks, "graphs": self.graphs,
                "prm_samples": self.prm_samples}

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.json", "trials": out / "trials.csv", "timing": out / "timing.json"}
        with open(paths["report"], "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")
        with open(paths["trials"], "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, TRIAL_FIELDS, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: _fmt(r.get(k)) for k in TRIAL_FIELDS})
        with open(paths["timing"], "w", encoding="utf-8") as fh:
            json.dump(self.timing, fh, indent=1)
            fh.write("\n")
        return paths

    def table(self) -> str:
        head = f"{'class':<7} {'planner':<18} {'n':>4} {'S_path':>7} {'S_trav':>7} {'L_path':>8} {'T':>8} {'W':>8}"
        lines = [head, "-" * len(head)]
        for s in self.summary:
            def f(x, p=3):
                return f"{x:.{p}f}" if x is not None else "-"
            lines.append(f"{s['class']:<7} {s['planner']:<18} {s['n_trials']:>4} {f(s['S_path']):>7} "
                         f"{f(s['S_trav']):>7} {f(s['L_path_mean'], 2):>8} {f(s['T_mean'], 4):>8} "
                         f"{f(s['W_mean'], 4):>8}")
        g = self.gamma_ordering
        lines.append(f"Gamma ordering: {g['checked']} trials checked, {g['violations']} violations")
        for c in self.soft_checks:
            lines.append(f"[{'ok' if c['holds'] else 'FLAG'}] {c['class']}: {c['check']}")
        return "\n".join(lines)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class _GraphCache:
    def __init__(self, emap, params, seed):
        self.emap, self.params, self.seed = emap, params, seed
        self.graphs: list[tuple[TrgGraph, object]] = []
        self.build_times: list[float] = []

    def get(self, start_xy) -> tuple[int, TrgGraph, object]:
        for k, (g, snap) in enumerate(self.graphs):
            if snap.nearest(start_xy, self.params.r_exp) is not None:
                return k, g, snap
        t0 = time.perf_counter()
        g = build_trg(self.emap, start_xy, self.params, derive_seed(self.seed, 1, len(self.graphs)))
        self.build_times.append(time.perf_counter() - t0)
        self.graphs.append((g, g.snapshot()))
        return len(self.graphs) - 1, g, self.graphs[-1][1]


def graph_edge_audit(graph: TrgGraph) -> dict:
    """Steepest stored edge and count of edges at or past the inclination bound."""
    u, v, d, w = graph.edge_arrays()
    pos = graph.positions
    if len(u) == 0:
        return {"nodes": graph.n_nodes, "edges": 0, "max_inclination_deg": None, "steep_violations": 0}
    dxy = np.hypot(pos[u, 0] - pos[v, 0], pos[u, 1] - pos[v, 1])
    incl = np.arctan2(np.abs(pos[u, 2] - pos[v, 2]), dxy)
    bound = math.atan(graph.params.h_max / graph.params.r_robot)
    return {"nodes": graph.n_nodes, "edges": int(len(u)),
            "max_inclination_deg": float(np.degrees(incl.max())),
            "bound_deg": float(math.degrees(bound)),
            "steep_violations": int(np.count_nonzero(incl >= bound))}


def run_benchmark(config: BenchConfig, emap: ElevationMap | None = None, progress=None) -> BenchReport:
    cfg = config
    t_all = time.perf_counter()
    emap = emap if emap is not None else cfg.load_terrain()
    params = cfg.params
    gcache = _GraphCache(emap, params, cfg.master_seed)
    prm_cache: dict[int, PrmRoadmap] = {}
    strategies = sorted(cfg.strategies.items(), key=lambda kv: (kv[1], kv[0]))
    rows, timing_rows = [], []
    ordering_rows = []
    for ci, cls in enumerate(cfg.classes):
        try:
            scenarios = generate_scenarios(emap, cls, cfg.trials, derive_seed(cfg.master_seed, 2, ci), params)
        except Exception as e:  # a class that cannot be sampled fails all its trials
            scenarios = [None] * cfg.trials
            scen_err = str(e)
        for ti, sc in enumerate(scenarios):
            trav_seed = derive_seed(cfg.master_seed, 3, ci, ti)
            base = {"class": cls, "trial": ti}
            if sc is not None:
                base.update(start_x=sc.start_xy[0], start_y=sc.start_xy[1], goal_x=sc.goal_xy[0], goal_y=sc.goal_xy[1])
            results: list[tuple[str, float | None, PlanResult | None, str | None]] = []
            graph_nodes = None
            graph = None
            if sc is None:
                for label in cfg.labels():
                    results.append((label, None, None, f"scenario: {scen_err}"))
            else:
                for planner in cfg.planners:
                    if planner == "trg":
                        try:
                            _, graph, snap = gcache.get(sc.start_xy)
                            graph_nodes = graph.n_nodes
                        except StartNotStandable as e:
                            for name, g in strategies:
                                results.append((f"trg-{name}", g, None, f"build: {e}"))
                            continue
                        for name, g in strategies:
                            try:
                                r = plan(snap, PlanQuery(sc.start_xy, sc.goal_xy, g), cfg.smooth_window, emap)
                                results.append((f"trg-{name}", g, r, None))
                            except Exception as e:
                                results.append((f"trg-{name}", g, None, f"plan: {e}"))
                    elif planner == "astar":
                        try:
                            results.append(("astar", None, baseline_astar_grid(emap, sc.start_xy, sc.goal_xy, params,
                                                                               cfg.smooth_window), None))
                        except Exception as e:
                            results.append(("astar", None, None, f"plan: {e}"))
                    else:
                        try:
                            n = cfg.prm_samples
                            if n is None:
                                if graph_nodes is None:
                                    _, graph, _ = gcache.get(sc.start_xy)
                                    graph_nodes = graph.n_nodes
                                n = max(graph_nodes, 2)
                            if n not in prm_cache:
                                prm_cache[n] = PrmRoadmap(emap, n, derive_seed(cfg.master_seed, 4, n), params)
                            results.append(("prm", None, prm_cache[n].query(sc.start_xy, sc.goal_xy,
                                                                            cfg.smooth_window), None))
                        except Exception as e:
                            results.append(("prm", None, None, f"plan: {e}"))
            trg_ok = []
            for label, g, r, err in results:
                row = dict(base, planner=label, gamma=g, n_graph_nodes=graph_nodes,
                           path_ok=False, trav_ok=False, failure=err)
                if r is not None:
                    row["is_subgoal"] = r.is_subgoal
                    timing_rows.append({"class": cls, "trial": ti, "planner": label,
                                        "planning_time_ms": r.planning_time * 1e3})
                    if r.ok and not r.is_subgoal:
                        row.update(path_ok=True, L_path=r.L_path, W=r.W, dist_sum=r.dist_sum, risk_sum=r.risk_sum)
                        if label.startswith("trg-"):
                            trg_ok.append((g, r))
                        try:
                            tr = simulate_traversal(emap, r, cfg.follower, trav_seed, params, sc.start_heading)
                            T, _ = compute_metrics(r, tr)
                            row.update(trav_ok=tr.success, L_trav=tr.L_trav, T=T,
                                       failure=None if tr.success else f"trav: {tr.failure_reason}")
                        except Exception as e:
                            row["failure"] = f"trav: {e}"
                    else:
                        row["failure"] = "plan: subgoal" if r.ok else f"plan: {r.status}"
                rows.append(row)
            if len(trg_ok) == len(strategies) and len(strategies) > 1:
                ordering_rows.append(_ordering_row(cls, ti, trg_ok))
            if progress is not None:
                progress(cls, ti)

    summary = _summarize(cfg, rows, timing_rows)
    viol = [r for r in ordering_rows if not r["holds"]]
    report = BenchReport(
        config=cfg.to_dict(),
        rows=rows,
        summary=summary,
        gamma_ordering={"checked": len(ordering_rows), "violations": len(viol), "rows": ordering_rows},
        soft_checks=_soft_checks(cfg, summary),
        graphs=[graph_edge_audit(g) for g, _ in gcache.graphs],
        prm_samples=sorted(prm_cache),
    )
    report.timing = {
        "total_s": time.perf_counter() - t_all,
        "graph_build_s": gcache.build_times,
        "prm_build_s": {str(n): r.build_time for n, r in sorted(prm_cache.items())},
        "planning_time_ms": _timing_summary(timing_rows),
        "queries": timing_rows,
    }
    return report


def _ordering_row(cls, ti, trg_ok, tol=1e-9):
    trg_ok = sorted(trg_ok, key=lambda t: t[0])
    gam = [g for g, _ in trg_ok]
    risk = [r.risk_sum for _, r in trg_ok]
    dist = [r.dist_sum for _, r in trg_ok]
    holds = all(risk[k + 1] <= risk[k] + tol * max(1.0, risk[k]) for k in range(len(risk) - 1)) and \
        all(dist[k + 1] >= dist[k] - tol * max(1.0, dist[k]) for k in range(len(dist) - 1))
    return {"class": cls, "trial": ti, "gamma": gam, "risk_sum": risk, "dist_sum": dist, "holds": holds}


def _summarize(cfg, rows, timing_rows):
    out = []
    for cls in cfg.classes:
        for label in cfg.labels():
            rs = [r for r in rows if r["class"] == cls and r["planner"] == label]
            n = len(rs)
            ok = [r for r in rs if r["path_ok"]]
            tr = [r for r in rs if r["trav_ok"]]
            Lm, Ls = _stats([r["L_path"] for r in ok])
            Wm, Ws = _stats([r["W"] for r in ok])
            Tm, Ts = _stats([r["T"] for r in tr])
            out.append({"class": cls, "planner": label, "n_trials": n,
                        "S_path": len(ok) / n if n else 0.0, "S_trav": len(tr) / n if n else 0.0,
                        "L_path_mean": Lm, "L_path_std": Ls, "T_mean": Tm, "T_std": Ts, "W_mean": Wm, "W_std": Ws})
    return out


def _timing_summary(timing_rows):
    out = {}
    for r in timing_rows:
        out.setdefault(r["planner"], []).append(r["planning_time_ms"])
    return {k: {"mean": float(np.mean(v)), "std": float(np.std(v)), "median": float(np.median(v))}
            for k, v in sorted(out.items())}


def _soft_checks(cfg, summary):
    """Direction-of-result checks; reported, never raised."""
    checks = []
    by = {(s["class"], s["planner"]): s for s in summary}
    for cls in cfg.classes:
        bal = by.get((cls, "trg-balanced"))
        if bal is None:
            continue
        for other in ("astar", "prm"):
            o = by.get((cls, other))
            if o is not None:
                checks.append({"class": cls, "check": f"S_path trg-balanced >= {other}",
                               "values": [bal["S_path"], o["S_path"]], "holds": bal["S_path"] >= o["S_path"]})
        for other in ("trg-optimistic", "trg-conservative"):
            o = by.get((cls, other))
            if o is not None:
                a, b = bal["T_mean"], o["T_mean"]
                holds = a is not None and (b is None or a <= b)
                checks.append({"class": cls, "check": f"mean T trg-balanced <= {other}",
                               "values": [a, b], "holds": holds})
    return checks
