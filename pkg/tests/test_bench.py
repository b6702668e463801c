import json
import math

import numpy as np
import pytest

from conftest import plane_map
from oracles import grid_dijkstra
from trgplan.bench import (BenchConfig, ConfigError, FollowerParams, PrmRoadmap, ScenarioError, TerrainSpec,
                           baseline_astar_grid, baseline_prm_star, compute_metrics, generate_scenarios,
                           generate_terrain, run_benchmark, simulate_traversal)
from trgplan.bench.baselines import prm_radius, stability_grid
from trgplan.bench.explore import explore_to_goal
from trgplan.bench.metrics import deviation, normalized_risk
from trgplan.core import TrgParams, check_stability, pca_plane
from trgplan.elevation import ElevationMap, heights_in_disk
from trgplan.manage import LocalUpdateParams
from trgplan.planning import PlanResult

P = TrgParams()


@pytest.fixture(scope="module")
def flat20():
    return plane_map(200, 200)


def walled(nx=100, ny=100, gap=None):
    H = np.zeros((ny, nx))
    H[:, nx // 2 - 2:nx // 2 + 2] = 2.0
    if gap is not None:
        H[gap[0]:gap[1], nx // 2 - 2:nx // 2 + 2] = 0.0
    return ElevationMap(H, 0.1)


# -- terrain --------------------------------------------------------------------

def test_zero_relief_is_flat():
    m = generate_terrain(TerrainSpec(size_m=(5, 4), relief_m=0.0))
    assert m.heights.shape == (40, 50)
    assert np.all(m.heights == 0.0)


def test_terrain_is_deterministic_and_spans_the_relief():
    spec = TerrainSpec(size_m=(10, 10), relief_m=2.5, seed=4)
    a, b = generate_terrain(spec), generate_terrain(spec)
    assert a.heights.tobytes() == b.heights.tobytes()
    assert a.heights.max() - a.heights.min() == pytest.approx(2.5)
    c = generate_terrain(TerrainSpec(size_m=(10, 10), relief_m=2.5, seed=5))
    assert c.heights.tobytes() != a.heights.tobytes()


def test_ramp_feature_recovers_its_angle():
    spec = TerrainSpec(size_m=(10, 10), relief_m=0.5, seed=1,
                       features=({"type": "ramp", "center": [5, 5], "size": [6, 4], "angle_deg": 15.0,
                                  "direction_deg": 30.0},))
    m = generate_terrain(spec)
    s = heights_in_disk(m, (5.0, 5.0), 1.8)
    _, V, _ = pca_plane(s)
    normal = V[:, 2]
    assert math.degrees(math.acos(abs(normal[2]))) == pytest.approx(15.0, abs=0.1)


@pytest.mark.parametrize("kw", [dict(size_m=(0, 5)), dict(relief_m=-1.0), dict(roughness=1.0)])
def test_bad_terrain_spec(kw):
    with pytest.raises(ValueError):
        TerrainSpec(**kw)


def test_spec_dict_round_trip():
    spec = TerrainSpec(size_m=(8, 6), features=({"type": "plateau", "center": [2, 2], "radius": 1, "height": 1},))
    assert TerrainSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


# -- scenarios ------------------------------------------------------------------

def test_short_scenarios_on_flat_ground(flat20):
    sc = generate_scenarios(flat20, "short", 100, seed=3)
    assert len(sc) == 100
    for s in sc:
        assert 9.5 <= s.distance <= 10.5
        assert check_stability(flat20, s.start_xy, P)[0] and check_stability(flat20, s.goal_xy, P)[0]
    assert sc == generate_scenarios(flat20, "short", 100, seed=3)
    assert sc != generate_scenarios(flat20, "short", 100, seed=4)


def test_unstable_map_exhausts_the_budget():
    m = ElevationMap(np.random.default_rng(0).uniform(0, 2, (200, 200)), 0.1)
    with pytest.raises(ScenarioError, match="short"):
        generate_scenarios(m, "short", 5, seed=0, max_attempts=500)


def test_map_too_small_for_class(flat20):
    small = plane_map(60, 60)
    with pytest.raises(ScenarioError, match="long"):
        generate_scenarios(small, "long", 1, seed=0)
    with pytest.raises(ValueError):
        generate_scenarios(flat20, "huge", 1, seed=0)


# -- baselines --------------------------------------------------------------------

@pytest.mark.parametrize("goal", [(15.0, 3.0), (2.0, 16.0), (12.0, 13.0)])
def test_grid_astar_on_flat_ground_aligned(flat20, goal):
    res = baseline_astar_grid(flat20, (2.0, 3.0), goal, P)
    assert res.ok and res.W == 0.0
    assert res.L_path <= 1.05 * math.dist((2.0, 3.0), goal)


def test_grid_astar_on_flat_ground_any_heading(flat20):
    # an 8-connected path can exceed the straight line by up to sqrt(4 - 2 sqrt 2)
    bound = math.sqrt(4 - 2 * math.sqrt(2))
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.uniform(1.0, 19.0, (2, 2))
        res = baseline_astar_grid(flat20, tuple(a), tuple(b), P)
        assert res.ok
        assert res.L_path <= bound * math.dist(a, b) + 2 * flat20.resolution


def test_grid_astar_blocked_by_wall():
    res = baseline_astar_grid(walled(), (2.0, 5.0), (8.0, 5.0), P)
    assert res.status == "unreachable"


def test_grid_astar_matches_grid_dijkstra():
    rng = np.random.default_rng(2)
    H = np.zeros((50, 50))
    for _ in range(12):
        r, c = rng.integers(0, 45, 2)
        H[r:r + rng.integers(2, 6), c:c + rng.integers(2, 6)] = 1.0
    m = ElevationMap(H, 0.1)
    free, _ = stability_grid(m, P)
    # the cached grid agrees with the per-point test
    for r, c in rng.integers(0, 50, (40, 2)):
        assert free[r, c] == check_stability(m, m.cell_center(c, r), P)[0]
    cells = np.argwhere(free)
    for k in range(6):
        a, b = cells[rng.integers(len(cells), size=2)]
        start = m.cell_center(a[1], a[0])
        goal = m.cell_center(b[1], b[0])
        res = baseline_astar_grid(m, start, goal, P)
        expected = grid_dijkstra(free, m.resolution, tuple(a), tuple(b))
        if math.isinf(expected):
            assert res.status == "unreachable"
        else:
            assert res.total_cost == pytest.approx(expected, abs=1e-9)


def test_prm_radius_formula():
    n, area = 1000, 400.0
    g = 2 * math.sqrt(1.5) * math.sqrt(area / math.pi)
    assert prm_radius(n, area) == pytest.approx(g * math.sqrt(math.log(n) / n), rel=2e-3)


def test_prm_on_flat_ground_and_determinism():
    m = plane_map(100, 100)
    wins = 0
    for seed in range(5):
        res = baseline_prm_star(m, (1.0, 1.0), (9.0, 8.0), 600, seed, P)
        wins += res.ok
    assert wins == 5
    a = baseline_prm_star(m, (1.0, 1.0), (9.0, 8.0), 300, 11, P)
    b = baseline_prm_star(m, (1.0, 1.0), (9.0, 8.0), 300, 11, P)
    assert a.node_path == b.node_path and a.total_cost == b.total_cost
    assert a.total_cost == pytest.approx(a.dist_sum, rel=0.05) or a.total_cost >= math.dist((1, 1), (9, 8))


def test_prm_edges_pass_the_edge_gates():
    m = generate_terrain(TerrainSpec(size_m=(8, 8), relief_m=1.5, roughness=0.4, seed=2))
    rm = PrmRoadmap(m, 500, 0, P)
    from trgplan.core import evaluate_edge
    for a, b in list(zip(rm.u, rm.v))[:300]:
        assert evaluate_edge(m, rm.nodes[a], rm.nodes[b], P)[0]


def test_prm_blocked_by_wall():
    res = baseline_prm_star(walled(), (2.0, 5.0), (8.0, 5.0), 800, 0, P)
    assert res.status == "unreachable"


def test_prm_needs_two_samples():
    with pytest.raises(ValueError):
        PrmRoadmap(plane_map(30, 30), 1, 0)


# -- traversal ------------------------------------------------------------------

def straight_plan(p0, p1, n=21, z=0.0):
    t = np.linspace(0, 1, n)[:, None]
    W = np.column_stack([(1 - t) * np.array(p0) + t * np.array(p1), np.full(n, z)])
    r = PlanResult("ok", node_path=list(range(n)), waypoints=W)
    r.L_path = float(np.sum(np.linalg.norm(np.diff(W, axis=0), axis=1)))
    return r


def test_zero_noise_follow_on_flat_ground(flat20):
    r = straight_plan((2.0, 2.0), (12.0, 9.0))
    tr = simulate_traversal(flat20, r, FollowerParams(slip_k=0.0), seed=0)
    assert tr.success and tr.failure_reason is None
    assert tr.L_trav == pytest.approx(r.L_path, rel=0.01)
    assert math.dist(tr.trace[-1, :2], (12.0, 9.0)) <= P.r_robot


def test_zero_noise_follow_of_a_bent_path(flat20):
    W = np.array([[2, 2, 0], [6, 2, 0], [6, 7, 0], [10, 9, 0]], dtype=float)
    tr = simulate_traversal(flat20, W, FollowerParams(slip_k=0.0), seed=0, start_heading=math.pi)
    assert tr.success
    assert tr.L_trav <= 1.01 * float(np.sum(np.linalg.norm(np.diff(W, axis=0), axis=1)))


def test_crossing_an_unstable_band_fails():
    H = np.zeros((100, 100))
    H[:, 50:53] = 0.6
    m = ElevationMap(H, 0.1)
    tr = simulate_traversal(m, straight_plan((2.0, 5.0), (8.0, 5.0)), FollowerParams(slip_k=0.0), seed=0)
    assert not tr.success and tr.failure_reason == "instability"
    assert tr.trace[-1, 0] < 5.2


def test_slip_is_deterministic_per_seed():
    m = plane_map(100, 100, slope_deg=20.0, direction_deg=90.0)
    r = straight_plan((1.0, 5.0), (9.0, 5.0), z=math.nan)
    a = simulate_traversal(m, r, FollowerParams(slip_k=0.1), seed=5)
    b = simulate_traversal(m, r, FollowerParams(slip_k=0.1), seed=5)
    c = simulate_traversal(m, r, FollowerParams(slip_k=0.1), seed=6)
    assert np.array_equal(a.trace, b.trace) and a.L_trav == b.L_trav
    assert not np.array_equal(a.trace, c.trace)
    # slip lengthens the trip on the slope
    assert a.L_trav > simulate_traversal(m, r, FollowerParams(slip_k=0.0), seed=5).L_trav


def test_heavy_slip_leaves_the_path():
    m = plane_map(100, 100, slope_deg=20.0, direction_deg=90.0)
    tr = simulate_traversal(m, straight_plan((1.0, 5.0), (9.0, 5.0)), FollowerParams(slip_k=3.0), seed=1)
    assert not tr.success and tr.failure_reason in ("off_path", "instability")


def test_stalled_follower_is_stuck(flat20):
    fp = FollowerParams(speed=0.01, stall_timeout=1.0, slip_k=0.0)
    tr = simulate_traversal(flat20, straight_plan((2.0, 2.0), (6.0, 2.0)), fp, seed=0)
    assert not tr.success and tr.failure_reason == "stuck"


def test_follower_params_validated():
    with pytest.raises(ValueError):
        FollowerParams(speed=0.0)
    with pytest.raises(ValueError):
        FollowerParams(slip_k=-1.0)


# -- metrics --------------------------------------------------------------------

def test_deviation_formula_and_clamp():
    assert deviation(10.0, 10.0) == 0.0
    assert deviation(12.0, 10.0) == pytest.approx(1 / 6, abs=1e-12)
    assert deviation(9.0, 10.0) == 0.0
    with pytest.raises(ValueError):
        deviation(0.0, 10.0)


def test_normalized_risk_on_a_three_edge_path():
    r = PlanResult("ok", node_path=[0, 1, 2, 3], edge_d=[1.0, 2.0, 1.0], edge_w=[0.1, 0.4, 0.25], L_path=4.0)
    assert compute_metrics(r)[1] == pytest.approx(0.75 / 4.0)
    assert normalized_risk([0.0, 0.0, 0.0], 4.0) == 0.0


def test_metrics_need_a_successful_traversal_for_t(flat20):
    r = straight_plan((2.0, 2.0), (5.0, 2.0))
    r.edge_w = [0.0] * 20
    tr = simulate_traversal(flat20, r, FollowerParams(slip_k=0.0), seed=0)
    T, W = compute_metrics(r, tr)
    assert T == 0.0 and W == 0.0
    tr.success = False
    assert compute_metrics(r, tr)[0] is None
    with pytest.raises(ValueError):
        compute_metrics(PlanResult("unreachable"))


# -- sweep ------------------------------------------------------------------------

SMOKE = {"master_seed": 7, "terrain": {"size_m": [12, 12], "relief_m": 0.0}, "classes": ["short"], "trials": 1}


def test_flat_smoke_benchmark_succeeds_everywhere():
    rep = run_benchmark(BenchConfig.from_dict(SMOKE))
    assert {s["planner"] for s in rep.summary} == {"trg-optimistic", "trg-balanced", "trg-conservative",
                                                   "astar", "prm"}
    for s in rep.summary:
        assert s["S_path"] == 1.0 and s["S_trav"] == 1.0
        # no slip on flat ground; what remains is the turn-in from a random start heading
        assert s["T_mean"] < 0.02
    assert rep.gamma_ordering["checked"] == 1 and rep.gamma_ordering["violations"] == 0
    assert all(g["steep_violations"] == 0 for g in rep.graphs)


def test_benchmark_outputs_are_byte_identical(tmp_path):
    cfg = dict(SMOKE, terrain={"size_m": [12, 12], "relief_m": 1.0, "seed": 3}, trials=2)
    for k in ("a", "b"):
        run_benchmark(BenchConfig.from_dict(cfg)).write(tmp_path / k)
    for name in ("report.json", "trials.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads((tmp_path / "a" / "report.json").read_text())
    assert "planning_time_ms" not in (tmp_path / "a" / "trials.csv").read_text()
    assert doc["config"]["master_seed"] == 7


@pytest.mark.parametrize("bad", [{"trials": 0}, {"classes": ["tiny"]}, {"planners": ["rrt"]}, {"extra": 1},
                                 {"strategies": {"x": -1}}, {"params": {"r_robot": 5}}, {"smooth_window": 4}])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        BenchConfig.from_dict(dict(SMOKE, **bad))


def test_config_needs_terrain():
    with pytest.raises(ConfigError):
        BenchConfig.from_dict({"classes": ["short"]})


def test_trial_errors_do_not_abort_the_sweep():
    m = ElevationMap(np.random.default_rng(0).uniform(0, 2, (120, 120)), 0.1)
    cfg = BenchConfig.from_dict(dict(SMOKE, planners=["astar"]))
    rep = run_benchmark(cfg, emap=m)
    assert rep.summary[0]["S_path"] == 0.0
    assert rep.rows[0]["failure"].startswith("scenario")


# -- exploration ----------------------------------------------------------------

def test_exploration_reaches_an_off_graph_goal():
    m = plane_map(160, 100)
    out = explore_to_goal(m, (1.5, 5.0), (14.5, 5.0), params=P, seed=2, local_params=LocalUpdateParams(4.0))
    assert out.success and out.cycles > 1
    assert out.plans[0].is_subgoal and not out.plans[-1].is_subgoal
    out.graph.check_invariants()


def test_exploration_stops_at_a_wall():
    out = explore_to_goal(walled(), (2.0, 5.0), (8.0, 5.0), params=P, seed=0,
                          local_params=LocalUpdateParams(3.0), max_cycles=30)
    assert not out.success


@pytest.mark.parametrize("name", ["bench_default.json", "bench_smoke.json"])
def test_shipped_configs_load(name):
    from pathlib import Path
    cfg = BenchConfig.load(Path(__file__).parent.parent / "configs" / name)
    assert cfg.trials >= 1 and cfg.terrain is not None
