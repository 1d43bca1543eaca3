import pytest

from loopcharge.errors import InfeasibleError
from loopcharge.executor import efficiency, replay_hypercycles, validate
from loopcharge.kinematics import MotionPrimitive, Recharge, Wait
from loopcharge.oneshot import encode_oneshot, plan_oneshot
from loopcharge.smt import emit_smtlib

from instances import (
    tiny_adjacent_refill,
    tiny_far_recharger,
    tiny_two_workers,
    tiny_unreachable_recharger,
    tiny_zero_cost_loop,
)
from oracles import minimal_wait_exhaustive


def assert_valid(bundle, scenario):
    violations = validate(bundle, scenario)
    assert violations == [], violations[:5]


def test_adjacent_refill_is_waitless(solver_config):
    scenario = tiny_adjacent_refill()
    bundle = plan_oneshot(scenario, solver_config)
    assert_valid(bundle, scenario)
    report = efficiency(bundle, scenario)
    assert report.total_wait == 0
    assert report.efficiency == 100.0
    assert replay_hypercycles(bundle, scenario, 3) is None


def test_oneshot_matches_exhaustive_oracle(solver_config):
    scenario = tiny_far_recharger()
    oracle_w = minimal_wait_exhaustive(scenario)
    assert oracle_w is not None
    bundle = plan_oneshot(scenario, solver_config)
    assert_valid(bundle, scenario)
    assert efficiency(bundle, scenario).total_wait == oracle_w


def test_two_workers_one_recharger(solver_config):
    scenario = tiny_two_workers()
    oracle_w = minimal_wait_exhaustive(scenario)
    assert oracle_w is not None
    bundle = plan_oneshot(scenario, solver_config)
    assert_valid(bundle, scenario)
    assert efficiency(bundle, scenario).total_wait == oracle_w


def test_zero_cost_loop_pure_motion(solver_config):
    scenario = tiny_zero_cost_loop()
    bundle = plan_oneshot(scenario, solver_config)
    assert_valid(bundle, scenario)
    plan = bundle.plans["w1"]
    assert all(isinstance(a, MotionPrimitive) for a in plan)
    assert efficiency(bundle, scenario).total_wait == 0


def test_unreachable_recharger_is_infeasible(solver_config):
    scenario = tiny_unreachable_recharger()
    with pytest.raises(InfeasibleError):
        plan_oneshot(scenario, solver_config)


def test_short_horizon_warns():
    from instances import tiny_short_horizon

    with pytest.warns(UserWarning, match="cannot fit"):
        encode_oneshot(tiny_short_horizon())


def test_encoding_is_byte_stable():
    scenario = tiny_adjacent_refill()
    a, _ = encode_oneshot(scenario)
    b, _ = encode_oneshot(scenario)
    assert emit_smtlib(a) == emit_smtlib(b)


def test_weighted_objective_mode(solver_config):
    scenario = tiny_adjacent_refill()
    weighted = type(scenario)(
        workspace=scenario.workspace,
        workers=scenario.workers,
        rechargers=scenario.rechargers,
        potential_starts=scenario.potential_starts,
        horizon=scenario.horizon,
        delta_max=scenario.delta_max,
        weights=(1000, 1),
        objective_mode="weighted",
    )
    bundle = plan_oneshot(weighted, solver_config)
    assert_valid(bundle, weighted)
    # wait weight dominates: still a waitless plan
    assert efficiency(bundle, weighted).total_wait == 0
