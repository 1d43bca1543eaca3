import pytest

from loopcharge.errors import PlanningError
from loopcharge.executor import efficiency, replay_hypercycles, validate
from loopcharge.greedy import lambda_estimate, plan_greedy
from loopcharge.kinematics import UNIT_MOVES
from loopcharge.scenario import (
    RechargerSpec,
    Scenario,
    WorkerSpec,
    bundle_to_dict,
)
from loopcharge.workspace import Cell, Workspace

from instances import (
    rect_loop,
    spread_two_workers,
    square_loop,
    tiny_adjacent_refill,
)
from oracles import travel_time_oracle


def assert_valid(bundle, scenario):
    violations = validate(bundle, scenario)
    assert violations == [], violations[:5]


def test_greedy_single_worker_corridor():
    scenario = tiny_adjacent_refill()
    bundle = plan_greedy(scenario)
    assert_valid(bundle, scenario)
    assert replay_hypercycles(bundle, scenario, 3) is None
    report = efficiency(bundle, scenario)
    assert report.per_worker["w1"].loops_completed >= 1


def test_greedy_two_workers():
    scenario = spread_two_workers()
    bundle = plan_greedy(scenario)
    assert_valid(bundle, scenario)
    assert replay_hypercycles(bundle, scenario, 3) is None


def test_greedy_never_deficient_worker_returns_at_horizon():
    from instances import tiny_zero_cost_loop

    scenario = tiny_zero_cost_loop()
    bundle = plan_greedy(scenario)
    assert_valid(bundle, scenario)
    # the worker never drains, so nothing needs repairing after the horizon
    assert bundle.extended_horizon == scenario.horizon
    assert all(not hasattr(a, "dx") for a in bundle.plans["c1"])
    assert bundle.recharge_events == ()


def test_greedy_extension_refills_drained_worker():
    scenario = Scenario(
        workspace=Workspace(5, 5),
        workers=(WorkerSpec("w1", square_loop(1, 1), 100),),
        rechargers=(RechargerSpec("c1"),),
        potential_starts=(Cell(0, 4),),
        horizon=17,
        delta_max=4,
    )
    bundle = plan_greedy(scenario)
    assert_valid(bundle, scenario)
    # two free loops drain 16; the extension travels, refills 4 steps, returns
    assert bundle.extended_horizon > scenario.horizon
    assert sum(1 for a in bundle.plans["w1"] if hasattr(a, "delta")) == 4


def test_greedy_full_refill_before_release():
    scenario = tiny_adjacent_refill()
    bundle = plan_greedy(scenario)
    # after any recharge sequence, the worker is back at full charge
    traj = bundle.trajectories["w1"]
    plan = bundle.plans["w1"]
    emax = scenario.workers[0].emax
    for t in range(len(plan)):
        ends_service = hasattr(plan[t], "delta") and (
            t + 1 == len(plan) or not hasattr(plan[t + 1], "delta")
        )
        if ends_service:
            assert traj[t + 1].e == emax


def test_greedy_determinism_bytes():
    import json

    scenario = spread_two_workers()
    a = json.dumps(bundle_to_dict(plan_greedy(scenario)), sort_keys=True)
    b = json.dumps(bundle_to_dict(plan_greedy(scenario)), sort_keys=True)
    assert a.encode() == b.encode()


def test_lambda_adjacent_recharger_is_zero():
    scenario = tiny_adjacent_refill()
    # depleted worker at home (1, 1); recharger already at (0, 0), adjacent
    assert lambda_estimate(scenario, Cell(0, 0), "w1", 1, 0) == 0


def test_lambda_depleted_worker_travel_only():
    scenario = tiny_adjacent_refill()
    ws = scenario.workspace
    # depleted at home; recharger across the grid must travel to a seat
    lam = lambda_estimate(scenario, Cell(4, 4), "w1", 1, 0)
    loop_cells = set(scenario.workers[0].loop.cells)
    seats = {
        c for c in ws.neighborhood(Cell(1, 1))
        if c != Cell(1, 1) and c not in loop_cells
    }
    blocked = ws.with_obstacles(loop_cells)
    assert lam == travel_time_oracle(blocked, Cell(4, 4), seats, UNIT_MOVES)


def test_lambda_moving_worker_max_clause():
    # worker mid-loop with 6 affordable moves left; recharger 2 steps out
    scenario = Scenario(
        workspace=Workspace(7, 7),
        workers=(WorkerSpec("w1", square_loop(1, 1), 20),),
        rechargers=(RechargerSpec("c1"),),
        potential_starts=(Cell(6, 6),),
        horizon=9,  # wind-down keeps prediction at the depletion point
        delta_max=4,
    )
    # cursor 3, energy 6: stops after 6 moves back at cell index 1
    lam = lambda_estimate(scenario, Cell(2, 4), "w1", 3, 6)
    assert lam == 6


def test_greedy_unreachable_worker_fails():
    # pocket around the loop: no off-loop cell adjacent to any loop cell is
    # reachable from the recharger's start
    walls = frozenset(
        {Cell(4, y) for y in range(5)} | {Cell(x, 4) for x in range(4)}
    )
    scenario = Scenario(
        workspace=Workspace(6, 6, walls),
        workers=(WorkerSpec("w1", square_loop(0, 0), 8),),
        rechargers=(RechargerSpec("c1"),),
        potential_starts=(Cell(5, 5),),
        horizon=12,
        delta_max=4,
    )
    with pytest.raises(PlanningError, match="unreachable"):
        plan_greedy(scenario)
