import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trgplan.elevation import ElevationMap  # noqa: E402


def plane_map(nx, ny, res=0.1, slope_deg=0.0, direction_deg=0.0, base=0.0):
    """Tilted plane rising along ``direction_deg``."""
    x = np.arange(nx) * res
    y = np.arange(ny) * res
    X, Y = np.meshgrid(x, y)
    t = math.tan(math.radians(slope_deg))
    th = math.radians(direction_deg)
    return ElevationMap(base + t * (X * math.cos(th) + Y * math.sin(th)), res, (0.0, 0.0))


@pytest.fixture
def flat_small():
    return plane_map(60, 60)


@pytest.fixture
def flat_medium():
    return plane_map(120, 120)


@pytest.fixture(scope="session")
def rough_map():
    from trgplan.bench.terrain import TerrainSpec, generate_terrain
    return generate_terrain(TerrainSpec(size_m=(12, 12), relief_m=1.6, roughness=0.35, seed=5))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
