import json

import pytest

from loopcharge.cli import main
from loopcharge.executor import validate
from loopcharge.fixtures import artificial_floor, bundled, random_grid, tiny, warehouse
from loopcharge.greedy import plan_greedy
from loopcharge.render import bar_chart_svg, render_svg
from loopcharge.scenario import load_scenario, save_scenario
from loopcharge.smt import SolverConfig
from loopcharge.sweep import run_sweep, rows_to_csv


def test_bundled_fixtures_validate_and_round_trip(tmp_path):
    for name in ("tiny", "warehouse", "artificial_floor", "random20-1", "random30-2"):
        scenario = bundled(name)
        path = tmp_path / "s.json"
        save_scenario(scenario, path)
        assert load_scenario(path) == scenario


def test_warehouse_shape():
    s = warehouse()
    assert s.workspace.width == s.workspace.height == 19
    assert len(s.workers) == 4 and len(s.rechargers) == 2
    assert s.horizon == 35 and s.delta_max == 10
    assert sorted(w.emax for w in s.workers) == [10, 10, 12, 12]
    assert len(s.potential_starts) == 16


def test_p_down_selection_is_prefix():
    s = warehouse()
    sub = run_sweep.__globals__["_with"](s, potential_starts=s.potential_starts[:8])
    assert sub.potential_starts == s.potential_starts[:8]


def test_greedy_on_larger_fixtures():
    for scenario in (artificial_floor(), random_grid(0.2, 1), random_grid(0.3, 2)):
        bundle = plan_greedy(scenario)
        assert validate(bundle, scenario) == []


def test_render_svg_contains_layers(tmp_path):
    scenario = tiny()
    bundle = plan_greedy(scenario)
    svg = render_svg(scenario, bundle)
    assert svg.startswith("<svg")
    assert "polyline" in svg  # loop and trajectory outlines
    assert svg.count("<circle") >= 1


def test_bar_chart_handles_rows():
    rows = [
        {"T": 20, "efficiency": 70.0, "work_pct": 60.0, "recharge_pct": 10.0},
        {"T": 25, "efficiency": 80.0, "work_pct": 65.0, "recharge_pct": 15.0},
    ]
    svg = bar_chart_svg(rows, "T", "test")
    assert svg.count("<rect") >= 6


def test_sweep_csv_header_reproducibility():
    scenario = tiny()
    config = SolverConfig(command=["true"])
    rows = run_sweep("algo-compare", scenario, ["greedy"], config=config)
    text = rows_to_csv(rows, scenario, config, seed=42)
    header = text.splitlines()[0]
    assert header.startswith("#")
    assert scenario.digest() in header
    assert "seed=42" in header


def test_sweep_greedy_delta_max_kind():
    rows = run_sweep("delta_max", tiny(), [2, 4], algo="greedy",
                     config=SolverConfig(command=["true"]))
    assert [r["delta_max"] for r in rows] == [2, 4]
    assert all(r["status"] == "ok" for r in rows)


def test_cli_invalid_input_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["plan", "--scenario", str(bad), "--algo", "greedy",
                 "--out-dir", str(tmp_path / "o")]) == 3


def test_cli_unknown_fixture_exit_code(tmp_path):
    assert main(["plan", "--scenario", "fixture:nope", "--algo", "greedy",
                 "--out-dir", str(tmp_path / "o")]) == 3


def test_cli_plan_validate_render_fixtures(tmp_path):
    out = tmp_path / "run"
    assert main(["plan", "--scenario", "fixture:tiny", "--algo", "greedy",
                 "--out-dir", str(out)]) == 0
    assert (out / "bundle.json").exists()
    assert (out / "efficiency.json").exists()
    report = json.loads((out / "efficiency.json").read_text())
    assert 0 <= report["efficiency"] <= 100
    assert main(["validate", "--scenario", "fixture:tiny",
                 "--bundle", str(out / "bundle.json")]) == 0
    assert main(["render", "--scenario", "fixture:tiny",
                 "--bundle", str(out / "bundle.json"),
                 "--out", str(out / "x.svg")]) == 0
    assert (out / "x.svg").read_text().startswith("<svg")
    assert main(["fixtures", "--out-dir", str(tmp_path / "fx"), "--seed", "3"]) == 0
    assert (tmp_path / "fx" / "warehouse.json").exists()


def test_cli_validate_flags_bad_bundle(tmp_path):
    out = tmp_path / "run"
    assert main(["plan", "--scenario", "fixture:tiny", "--algo", "greedy",
                 "--out-dir", str(out)]) == 0
    doc = json.loads((out / "bundle.json").read_text())
    # strip the recharge events: validation must now fail
    doc["recharge_events"] = []
    (out / "tampered.json").write_text(json.dumps(doc))
    assert main(["validate", "--scenario", "fixture:tiny",
                 "--bundle", str(out / "tampered.json")]) == 1


def test_cli_oneshot_with_dump(tmp_path, solver_config):
    out = tmp_path / "run"
    cmd = " ".join(solver_config.resolved_command())
    assert main(["plan", "--scenario", "fixture:tiny", "--algo", "oneshot",
                 "--out-dir", str(out), "--solver-cmd", cmd,
                 "--timeout-secs", "300", "--dump-smt"]) == 0
    assert (out / "query.smt2").exists()
    assert "(check-sat)" in (out / "query.smt2").read_text()
