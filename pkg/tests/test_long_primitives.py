"""End-to-end coverage for primitives that sweep more than their endpoints."""

import json

import pytest

from loopcharge.executor import efficiency, replay_hypercycles, validate
from loopcharge.greedy import plan_greedy
from loopcharge.kinematics import UNIT_MOVES, MotionPrimitive
from loopcharge.oneshot import plan_oneshot
from loopcharge.scenario import RechargerSpec, Scenario, WorkerSpec, load_scenario, save_scenario
from loopcharge.twoshot import plan_twoshot
from loopcharge.workspace import Cell, Workspace

from instances import rect_loop
from oracles import minimal_wait_exhaustive

E, W, S, N = UNIT_MOVES
DASH_E = MotionPrimitive("EE", 2, 0, 1, ((0, 0), (1, 0), (2, 0)))
DASH_W = MotionPrimitive("WW", -2, 0, 1, ((0, 0), (-1, 0), (-2, 0)))
DASHY = (E, W, S, N, DASH_E, DASH_W)


def dash_scenario() -> Scenario:
    return Scenario(
        workspace=Workspace(9, 3),
        workers=(WorkerSpec("w1", rect_loop(1, 0, 2, 2), 4),),
        rechargers=(RechargerSpec("c1", DASHY),),
        potential_starts=(Cell(8, 1),),
        horizon=12,
        delta_max=4,
    )


def test_dash_scenario_round_trips(tmp_path):
    s = dash_scenario()
    save_scenario(s, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == s


def test_oneshot_with_dashes_matches_oracle(solver_config):
    scenario = dash_scenario()
    oracle_w = minimal_wait_exhaustive(scenario)
    assert oracle_w is not None
    bundle = plan_oneshot(scenario, solver_config)
    assert validate(bundle, scenario) == []
    assert efficiency(bundle, scenario).total_wait == oracle_w


def test_twoshot_with_dashes_is_sound(solver_config):
    scenario = dash_scenario()
    bundle, _p1 = plan_twoshot(scenario, solver_config)
    assert validate(bundle, scenario) == []
    assert replay_hypercycles(bundle, scenario, 3) is None


def test_greedy_with_dashes_is_sound():
    scenario = dash_scenario()
    bundle = plan_greedy(scenario)
    assert validate(bundle, scenario) == []
    # the dash actually gets used on the long approach
    assert any(getattr(a, "name", "") in ("EE", "WW") for a in bundle.plans["c1"])
