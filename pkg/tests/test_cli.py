import json
import subprocess
import sys

import numpy as np
import pytest

from trgplan.cli import main
from trgplan.core import load_graph
from trgplan.elevation import ElevationMap, load_map, save_ascii_grid


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    H = np.zeros((60, 80))
    H[:, 60:] = 1.0  # cliff: x > 6 m is a separate shelf
    save_ascii_grid(ElevationMap(H, 0.1), d / "map.asc")
    assert main(["build", "--map", str(d / "map.asc"), "--start", "1,1", "--seed", "3",
                 "--out", str(d / "g.json")]) == 0
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_map(tmp_path, capsys):
    out = tmp_path / "t.asc"
    assert run("generate-map", "--size", 6, 4, "--relief", 1.5, "--seed", 2, "--out", out) == 0
    m = load_map(out)
    assert m.heights.shape == (40, 60)
    assert m.heights.max() - m.heights.min() == pytest.approx(1.5, abs=1e-3)


def test_build_is_seeded_by_flag_or_environment(work, tmp_path, monkeypatch):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    assert run("build", "--map", work / "map.asc", "--start", "1,1", "--seed", 3, "--out", a) == 0
    monkeypatch.setenv("TRG_SEED", "3")
    assert run("build", "--map", work / "map.asc", "--start", "1,1", "--out", b) == 0
    monkeypatch.setenv("TRG_SEED", "4")
    assert run("build", "--map", work / "map.asc", "--start", "1,1", "--out", c) == 0
    assert a.read_bytes() == b.read_bytes() == (work / "g.json").read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_build_refuses_unstandable_start(work, capsys):
    assert run("build", "--map", work / "map.asc", "--start", "5.95,3", "--out", work / "x.json") == 2
    assert "start not standable" in capsys.readouterr().err
    assert run("build", "--map", work / "map.asc", "--start", "50,3", "--out", work / "x.json") == 2


def test_build_region_limits_growth(work, tmp_path):
    out = tmp_path / "r.json"
    assert run("build", "--map", work / "map.asc", "--start", "3,3", "--region-radius", 1.5, "--out", out) == 0
    g = load_graph(out)
    assert all(np.hypot(*(g.position(i)[:2] - (3, 3))) <= 1.5 + 1e-9 for i in g.node_ids())


def test_plan_strategy_equals_explicit_gamma(work, tmp_path):
    base = ["plan", "--graph", work / "g.json", "--map", work / "map.asc", "--start", "1,1", "--goal", "5,4",
            "--omit-timing"]
    assert run(*base, "--strategy", "balanced", "--out", tmp_path / "s") == 0
    assert run(*base, "--Gamma", 3, "--out", tmp_path / "g") == 0
    assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "g.csv").read_bytes()
    assert (tmp_path / "s.json").read_bytes() == (tmp_path / "g.json").read_bytes()
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["status"] == "ok" and doc["gamma"] == 3.0 and not doc["is_subgoal"]


def test_plan_to_the_shelf_is_unreachable_but_not_an_error(work, tmp_path, capsys):
    rc = run("plan", "--graph", work / "g.json", "--map", work / "map.asc", "--start", "1,1", "--goal", "7,3",
             "--out", tmp_path / "u")
    assert rc == 0
    doc = json.loads((tmp_path / "u.json").read_text())
    assert doc["status"] == "unreachable"
    assert "status=unreachable" in capsys.readouterr().out


def test_plan_rejects_bad_input(work, tmp_path):
    base = ["plan", "--graph", work / "g.json", "--map", work / "map.asc", "--goal", "5,4", "--out", tmp_path / "x"]
    assert run(*base, "--start", "1,1", "--Gamma", -1) == 2
    assert run(*base, "--start", "1,1", "--smooth-window", 4) == 2
    assert run(*base, "--start", "40,40") == 2  # start cannot attach
    with pytest.raises(SystemExit) as e:
        run(*base, "--start", "1,1", "--strategy", "balanced", "--Gamma", 1)
    assert e.value.code == 2


def test_missing_inputs_exit_2(tmp_path, capsys):
    assert run("render", "--map", tmp_path / "nope.asc", "--out", tmp_path / "o.svg") == 2
    assert "cannot load map" in capsys.readouterr().err
    (tmp_path / "bad.json").write_text("{")
    assert run("plan", "--graph", tmp_path / "bad.json", "--map", tmp_path / "nope.asc", "--start", "1,1",
               "--goal", "2,2", "--out", tmp_path / "p") == 2


def test_bad_seed_environment(work, monkeypatch):
    monkeypatch.setenv("TRG_SEED", "abc")
    assert run("build", "--map", work / "map.asc", "--start", "1,1", "--out", work / "y.json") == 2


def test_render_is_deterministic(work, tmp_path):
    args = ["render", "--map", work / "map.asc", "--graph", work / "g.json"]
    assert run(*args, "--out", tmp_path / "a.svg") == 0
    assert run(*args, "--out", tmp_path / "b.svg") == 0
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_bench_command(tmp_path, capsys):
    cfg = {"master_seed": 1, "terrain": {"size_m": [12, 12], "relief_m": 0.0}, "classes": ["short"], "trials": 1,
           "planners": ["trg", "astar"], "strategies": {"balanced": 3.0}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert run("bench", "--config", tmp_path / "c.json", "--out", tmp_path / "o") == 0
    for name in ("report.json", "trials.csv", "timing.json", "success_rates.svg", "metrics.svg"):
        assert (tmp_path / "o" / name).exists()
    assert "trg-balanced" in capsys.readouterr().out
    (tmp_path / "bad.json").write_text(json.dumps(dict(cfg, trials=-1)))
    assert run("bench", "--config", tmp_path / "bad.json", "--out", tmp_path / "o2") == 2


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "trgplan", "render", "--map", str(tmp_path / "none.asc"),
                        "--out", str(tmp_path / "x.svg")], capture_output=True, text=True)
    assert p.returncode == 2 and p.stderr.startswith("error:")
