"""Desk-scale benchmark: terrain, scenarios, baselines, traversal and metrics."""
from .baselines import PrmRoadmap, baseline_astar_grid, baseline_prm_star
from .metrics import compute_metrics
from .runner import BenchConfig, BenchReport, ConfigError, run_benchmark
from .scenarios import Scenario, ScenarioError, generate_scenarios
from .terrain import TerrainSpec, generate_terrain
from .traversal import FollowerParams, TraversalResult, simulate_traversal
