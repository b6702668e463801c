"""Random start/goal pairs at fixed straight-line distance classes."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..construct import make_rng
from ..core import TrgParams, check_stability
from ..elevation import ElevationMap

CLASSES = {"short": 10.0, "medium": 20.0, "long": 30.0}
DISTANCE_TOLERANCE = 0.05


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    start_xy: tuple[float, float]
    goal_xy: tuple[float, float]
    start_heading: float
    goal_heading: float
    nominal_distance: float
    cls: str = ""

    @property
    def distance(self) -> float:
        return math.dist(self.start_xy, self.goal_xy)

    def to_dict(self) -> dict:
        return asdict(self)


def generate_scenarios(emap: ElevationMap, cls: str, n: int, seed, params: TrgParams | None = None,
                       max_attempts: int | None = None) -> list[Scenario]:
    """Rejection-sample ``n`` scenarios whose endpoints both pass the stability test."""
    params = params or TrgParams()
    try:
        nominal = CLASSES[cls]
    except KeyError:
        raise ValueError(f"unknown scenario class {cls!r}") from None
    xmin, xmax, ymin, ymax = emap.extent
    m = params.r_robot
    xmin, xmax, ymin, ymax = xmin + m, xmax - m, ymin + m, ymax - m
    if math.hypot(xmax - xmin, ymax - ymin) < nominal * (1 - DISTANCE_TOLERANCE):
        raise ScenarioError(f"map too small for {cls} scenarios ({nominal} m)")
    rng = make_rng(seed)
    budget = max_attempts if max_attempts is not None else 2000 * n
    out = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > budget:
            raise ScenarioError(f"rejection budget exhausted for {cls} scenarios "
                                f"({len(out)}/{n} after {budget} attempts)")
        sx = rng.uniform(xmin, xmax)
        sy = rng.uniform(ymin, ymax)
        dist = nominal * rng.uniform(1 - DISTANCE_TOLERANCE, 1 + DISTANCE_TOLERANCE)
        ang = rng.uniform(0, 2 * math.pi)
        h0, h1 = rng.uniform(-math.pi, math.pi, size=2)
        gx = sx + dist * math.cos(ang)
        gy = sy + dist * math.sin(ang)
        if not (xmin <= gx <= xmax and ymin <= gy <= ymax):
            continue
        if not check_stability(emap, (sx, sy), params)[0] or not check_stability(emap, (gx, gy), params)[0]:
            continue
        out.append(Scenario((float(sx), float(sy)), (float(gx), float(gy)), float(h0), float(h1), nominal, cls))
    return out
