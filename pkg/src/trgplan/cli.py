"""Command-line front end.

Exit codes: 0 success (an unreachable goal is a valid result), 1 runtime
failure, 2 usage or validation failure.  ``TRG_SEED`` supplies the seed when
``--seed`` is absent.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from .core import TrgParams, load_graph, save_graph
from .elevation import MapFormatError, load_map, save_ascii_grid


class UsageError(Exception):
    """Bad input detected before any work starts (exit 2)."""


def _xy(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y but got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise argparse.ArgumentTypeError(f"non-finite coordinate {text!r}")
    return x, y


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TRG_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"TRG_SEED must be an integer, got {env!r}") from None


def _params(args) -> TrgParams:
    d = {}
    if getattr(args, "params", None):
        try:
            with open(args.params, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read params {args.params}: {e}") from None
        if not isinstance(d, dict):
            raise UsageError("params file must hold a JSON object")
    for flag, key in (("r_robot", "r_robot"), ("r_exp", "r_exp"), ("h_max", "h_max"),
                      ("risk_ratio", "gamma"), ("min_plane_samples", "min_plane_samples")):
        v = getattr(args, flag, None)
        if v is not None:
            d[key] = v
    try:
        return TrgParams.from_dict(d)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid parameters: {e}") from None


def _load_map(path):
    try:
        return load_map(path)
    except (OSError, MapFormatError, ValueError) as e:
        raise UsageError(f"cannot load map {path}: {e}") from None


def _load_graph(path):
    try:
        return load_graph(path)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot load graph {path}: {e}") from None


def cmd_build(args) -> int:
    from .construct import Region, StartNotStandable, build_trg

    params = _params(args)
    seed = _seed(args)
    emap = _load_map(args.map)
    if not emap.in_bounds(*args.start):
        raise UsageError(f"start {args.start} is outside the map")
    region = Region(args.start, args.region_radius) if args.region_radius else None
    t0 = time.perf_counter()
    try:
        g = build_trg(emap, args.start, params, seed, region)
    except StartNotStandable as e:
        raise UsageError(str(e)) from None
    dt = time.perf_counter() - t0
    save_graph(g, args.out)
    print(f"nodes={g.n_nodes} edges={g.n_edges} build_time_s={dt:.3f}")
    return 0


def cmd_plan(args) -> int:
    from .planning import PlanQuery, StartUnattachable, plan, resolve_gamma, write_path_csv, write_plan_json

    if args.smooth_window < 1 or args.smooth_window % 2 == 0:
        raise UsageError("--smooth-window must be an odd count >= 1")
    try:
        gamma = resolve_gamma(args.strategy, args.Gamma)
    except ValueError as e:
        raise UsageError(str(e)) from None
    g = _load_graph(args.graph)
    emap = _load_map(args.map)
    try:
        res = plan(g, PlanQuery(args.start, args.goal, gamma), args.smooth_window, emap)
    except StartUnattachable as e:
        raise UsageError(str(e)) from None
    prefix = args.out
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_path_csv(res, f"{prefix}.csv")
    write_plan_json(res, f"{prefix}.json", include_timing=not args.omit_timing)
    line = f"status={res.status} is_subgoal={str(res.is_subgoal).lower()} nodes={len(res.node_path)}"
    if res.ok:
        line += f" L_path={res.L_path:.3f} W={res.W:.4f} total_cost={res.total_cost:.3f}"
    print(line)
    return 0


def cmd_bench(args) -> int:
    from .bench.runner import BenchConfig, ConfigError, run_benchmark
    from .report import plot_benchmark

    try:
        cfg = BenchConfig.load(args.config)
    except ConfigError as e:
        raise UsageError(str(e)) from None
    if args.seed is not None or os.environ.get("TRG_SEED"):
        import dataclasses
        cfg = dataclasses.replace(cfg, master_seed=_seed(args))
    try:
        emap = cfg.load_terrain()
    except (OSError, MapFormatError, ValueError) as e:
        raise UsageError(f"cannot load terrain: {e}") from None
    progress = None
    if args.verbose:
        def progress(cls, i):
            print(f"  {cls} trial {i}", file=sys.stderr, flush=True)
    rep = run_benchmark(cfg, emap, progress)
    paths = rep.write(args.out)
    if not args.no_figures:
        plot_benchmark(rep, args.out)
    print(rep.table())
    print(f"wrote {paths['report']} and {paths['trials']}")
    return 0


def cmd_render(args) -> int:
    from .planning import read_path_csv
    from .report import render_scene

    emap = _load_map(args.map)
    g = _load_graph(args.graph) if args.graph else None
    path = None
    if args.path:
        try:
            path = read_path_csv(args.path)
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read path {args.path}: {e}") from None
    render_scene(emap, g, path, args.out, title=args.title, show_edges=not args.no_edges)
    print(f"wrote {args.out}")
    return 0


def cmd_generate_map(args) -> int:
    from .bench.terrain import TerrainSpec, generate_terrain

    d = {}
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read terrain spec {args.spec}: {e}") from None
    for flag, key in (("size", "size_m"), ("resolution", "resolution_m"), ("relief", "relief_m"),
                      ("roughness", "roughness")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    d["seed"] = _seed(args) if args.seed is not None or "seed" not in d else d["seed"]
    try:
        spec = TerrainSpec.from_dict(d)
    except (TypeError, ValueError, KeyError) as e:
        raise UsageError(f"invalid terrain spec: {e}") from None
    emap = generate_terrain(spec)
    save_ascii_grid(emap, args.out)
    print(f"wrote {args.out} ({emap.width_cells}x{emap.height_cells} cells)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trgplan", description="Traversal risk graph construction and planning.")
    sub = p.add_subparsers(dest="command", required=True)

    def param_flags(sp):
        sp.add_argument("--params", help="JSON file with graph parameters")
        sp.add_argument("--r-robot", type=float, dest="r_robot")
        sp.add_argument("--r-exp", type=float, dest="r_exp")
        sp.add_argument("--h-max", type=float, dest="h_max")
        sp.add_argument("--risk-ratio", type=float, dest="risk_ratio",
                        help="longitudinal share of the edge risk, in [0, 1]")
        sp.add_argument("--min-plane-samples", type=int, dest="min_plane_samples")

    b = sub.add_parser("build", help="build a traversal risk graph from a start position")
    b.add_argument("--map", required=True)
    b.add_argument("--start", required=True, type=_xy)
    b.add_argument("--seed", type=int)
    b.add_argument("--region-radius", type=float, help="limit growth to a disk around the start")
    b.add_argument("--out", required=True)
    param_flags(b)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("plan", help="plan a path on a saved graph")
    q.add_argument("--graph", required=True)
    q.add_argument("--map", required=True)
    q.add_argument("--start", required=True, type=_xy)
    q.add_argument("--goal", required=True, type=_xy)
    grp = q.add_mutually_exclusive_group()
    grp.add_argument("--strategy", choices=["optimistic", "balanced", "conservative"])
    grp.add_argument("--Gamma", type=float, help="safety factor; overrides --strategy")
    q.add_argument("--smooth-window", type=int, default=5)
    q.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.json")
    q.add_argument("--omit-timing", action="store_true", help="leave planning_time_ms out of the JSON")
    q.set_defaults(func=cmd_plan)

    r = sub.add_parser("bench", help="run a benchmark sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, help="override the config master seed")
    r.add_argument("--no-figures", action="store_true")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_bench)

    s = sub.add_parser("render", help="render map, graph and path to an image (SVG by extension)")
    s.add_argument("--map", required=True)
    s.add_argument("--graph")
    s.add_argument("--path")
    s.add_argument("--out", required=True)
    s.add_argument("--title")
    s.add_argument("--no-edges", action="store_true")
    s.set_defaults(func=cmd_render)

    m = sub.add_parser("generate-map", help="write a synthetic terrain as an ASCII grid")
    m.add_argument("--spec", help="JSON terrain spec")
    m.add_argument("--size", type=float, nargs=2, metavar=("W", "H"))
    m.add_argument("--resolution", type=float)
    m.add_argument("--relief", type=float)
    m.add_argument("--roughness", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_generate_map)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - one-line diagnostic for any runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
