import xml.etree.ElementTree as ET

import numpy as np

from conftest import plane_map
from trgplan.construct import Region, build_trg
from trgplan.core import NodeState
from trgplan.elevation import ElevationMap
from trgplan.manage import LocalUpdateParams, update_cycle
from trgplan.planning import PlanQuery, plan
from trgplan.report import STATE_COLORS, plot_benchmark, render_scene

SVG = "{http://www.w3.org/2000/svg}svg"


def scene(tmp_path, name="s.svg"):
    m = plane_map(80, 60)
    g = build_trg(m, (2.0, 3.0), seed=1, region=Region((2.0, 3.0), 1.6))
    update_cycle(g, m, (2.0, 3.0), local_params=LocalUpdateParams(1.6), expand=False)
    g.add_node((7.0, 5.0, 0.0), NodeState.INVALID)
    res = plan(g, PlanQuery((2.0, 3.0), (3.0, 3.5)))
    out = tmp_path / name
    render_scene(m, g, res.waypoints, out, title="flat")
    return out


def test_scene_is_valid_svg_with_every_state_color(tmp_path):
    out = scene(tmp_path)
    root = ET.parse(out).getroot()
    assert root.tag == SVG and root.get("version") == "1.1"
    text = out.read_text()
    for col in STATE_COLORS.values():
        assert col in text
    assert "Frontier" in text and "Invalid" in text


def test_scene_render_is_byte_stable(tmp_path):
    assert scene(tmp_path, "a.svg").read_bytes() == scene(tmp_path, "b.svg").read_bytes()


def test_map_with_gaps_and_no_graph(tmp_path):
    H = np.zeros((30, 30))
    H[5:10, 5:10] = np.nan
    render_scene(ElevationMap(H, 0.1), out=tmp_path / "m.svg")
    assert ET.parse(tmp_path / "m.svg").getroot().tag == SVG
    render_scene(ElevationMap(H, 0.1), out=tmp_path / "m.png")
    assert (tmp_path / "m.png").read_bytes()[:4] == b"\x89PNG"


def test_benchmark_charts(tmp_path):
    summary = [{"class": c, "planner": p, "S_path": 0.9, "S_trav": 0.8, "T_mean": 0.02, "T_std": 0.01,
                "W_mean": 0.1, "W_std": None} for c in ("short", "long") for p in ("trg-balanced", "astar")]
    summary[-1]["T_mean"] = None
    paths = plot_benchmark({"summary": summary}, tmp_path)
    assert len(paths) == 2
    for p in paths:
        assert ET.parse(p).getroot().get("version") == "1.1"
