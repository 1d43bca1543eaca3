import pytest

from loopcharge.executor import (
    ZERO_DELAYS,
    DelayModel,
    efficiency,
    replay_hypercycles,
    simulate_with_delays,
    validate,
)
from loopcharge.kinematics import UNIT_MOVES, Recharge, Wait, WorkingLoop
from loopcharge.scenario import (
    RechargeEvent,
    RechargerSpec,
    Scenario,
    WorkerSpec,
    make_bundle,
)
from loopcharge.workspace import Cell, Workspace

E, W, S, N = UNIT_MOVES


def square_loop(x0=1, y0=1):
    cells = [
        Cell(x0, y0), Cell(x0 + 1, y0), Cell(x0 + 2, y0), Cell(x0 + 2, y0 + 1),
        Cell(x0 + 2, y0 + 2), Cell(x0 + 1, y0 + 2), Cell(x0, y0 + 2), Cell(x0, y0 + 1),
    ]
    return WorkingLoop(tuple(cells), (E, E, S, S, W, W, N, N))


@pytest.fixture
def tiny():
    """Worker loops twice (16 moves) then refills with 4 recharge steps from
    a recharger that serves from its corner start (0, 0), adjacent to home."""
    scenario = Scenario(
        workspace=Workspace(5, 5),
        workers=(WorkerSpec("w1", square_loop(), 16),),
        rechargers=(RechargerSpec("c1"),),
        potential_starts=(Cell(0, 0), Cell(4, 4)),
        horizon=21,
        delta_max=4,
    )
    loop = scenario.workers[0].loop
    wplan = tuple(loop.moves) * 2 + (Recharge(4),) * 4
    cplan = (Wait(),) * 20
    events = tuple(RechargeEvent(t, "w1", "c1", 4, loop.home) for t in (17, 18, 19, 20))
    bundle = make_bundle(
        scenario, 21, 21,
        {"w1": wplan, "c1": cplan},
        events,
        {"c1": Cell(0, 0)},
    )
    return scenario, bundle


def test_valid_bundle_passes(tiny):
    scenario, bundle = tiny
    assert validate(bundle, scenario) == []


def test_recharge_without_adjacent_recharger(tiny):
    scenario, bundle = tiny
    plans = dict(bundle.plans)
    start = Cell(4, 4)  # far corner, not adjacent to home
    broken = make_bundle(scenario, 21, 21, plans, bundle.recharge_events, {"c1": start})
    clauses = {v.clause for v in validate(broken, scenario)}
    assert "recharge without recharger" in clauses


def test_recharge_without_event(tiny):
    scenario, bundle = tiny
    broken = make_bundle(
        scenario, 21, 21, dict(bundle.plans), bundle.recharge_events[:-1],
        dict(bundle.recharger_initial),
    )
    clauses = {v.clause for v in validate(broken, scenario)}
    assert "recharge without recharger" in clauses


def test_charge_matching_violation(tiny):
    scenario, bundle = tiny
    wplan = bundle.plans["w1"][:-1] + (Wait(),)
    broken = make_bundle(
        scenario, 21, 21, {"w1": wplan, "c1": bundle.plans["c1"]},
        bundle.recharge_events[:-1], dict(bundle.recharger_initial),
    )
    clauses = {v.clause for v in validate(broken, scenario)}
    assert "charge matching" in clauses


def test_position_matching_violation(tiny):
    scenario, bundle = tiny
    loop = scenario.workers[0].loop
    wplan = (Wait(),) * 4 + tuple(loop.moves) * 2
    broken = make_bundle(
        scenario, 21, 21, {"w1": wplan[:20], "c1": bundle.plans["c1"]}, (),
        dict(bundle.recharger_initial),
    )
    clauses = {v.clause for v in validate(broken, scenario)}
    assert "position matching" in clauses or "charge matching" in clauses


def test_loop_order_violation(tiny):
    scenario, bundle = tiny
    wplan = (S,) + bundle.plans["w1"][1:]
    broken = make_bundle(
        scenario, 21, 21, {"w1": wplan, "c1": bundle.plans["c1"]},
        bundle.recharge_events, dict(bundle.recharger_initial),
    )
    clauses = {v.clause for v in validate(broken, scenario)}
    assert "loop order" in clauses


def test_collision_violation(tiny):
    scenario, bundle = tiny
    # recharger drives into the loop's top edge and parks there
    cplan = (E, E, N,) + (Wait(),) * 17
    start = Cell(0, 2)
    scenario2 = Scenario(
        workspace=scenario.workspace,
        workers=scenario.workers,
        rechargers=scenario.rechargers,
        potential_starts=(Cell(0, 2), Cell(0, 0)),
        horizon=21,
        delta_max=4,
    )
    broken = make_bundle(
        scenario2, 21, 21, {"w1": bundle.plans["w1"], "c1": cplan}, (),
        {"c1": start},
    )
    clauses = {v.clause for v in validate(broken, scenario2)}
    assert "collision" in clauses


def test_obstacle_violation(tiny):
    scenario, bundle = tiny
    ws = Workspace(5, 5, frozenset({Cell(0, 4)}))
    scenario2 = Scenario(
        workspace=ws,
        workers=scenario.workers,
        rechargers=scenario.rechargers,
        potential_starts=(Cell(0, 3), Cell(4, 4)),
        horizon=21,
        delta_max=4,
    )
    cplan = (S,) + (Wait(),) * 19  # steps onto the obstacle at (0, 4)
    broken = make_bundle(
        scenario2, 21, 21, {"w1": bundle.plans["w1"], "c1": cplan},
        bundle.recharge_events, {"c1": Cell(0, 3)},
    )
    clauses = {v.clause for v in validate(broken, scenario2)}
    assert "blocked cell" in clauses
    assert "recharger position matching" in clauses


def test_single_action_mutations_trip_a_clause(tiny):
    """Perturbing any single worker action either still validates or trips a clause."""
    scenario, bundle = tiny
    alternatives = [Wait(), Recharge(4), E, S]
    for t in range(20):
        for alt in alternatives:
            wplan = list(bundle.plans["w1"])
            if wplan[t] == alt:
                continue
            wplan[t] = alt
            mutated = make_bundle(
                scenario, 21, 21, {"w1": tuple(wplan), "c1": bundle.plans["c1"]},
                bundle.recharge_events, dict(bundle.recharger_initial),
            )
            violations = validate(mutated, scenario)
            if not violations:
                # a legal plan must still replay and match
                assert replay_hypercycles(mutated, scenario, 2) is None


def test_efficiency_report(tiny):
    scenario, bundle = tiny
    report = efficiency(bundle, scenario)
    assert report.total_wait == 0
    assert report.recharger_cost == 0
    assert report.efficiency == 100.0
    assert report.per_worker["w1"].loops_completed == 2
    assert report.per_worker["w1"].work_steps == 16
    assert report.per_worker["w1"].recharge_steps == 4


def test_efficiency_formula_direct():
    # |R|=2, horizon 30, W=6 -> 90.0
    assert (2 * 30 - 6) / (2 * 30) * 100.0 == 90.0


def test_efficiency_split_percentages(tiny):
    """50 work, 10 recharge, 10 wait over 70 slots -> 71.4% work, 14.3% recharge."""
    scenario, _ = tiny
    loop = scenario.workers[0].loop
    # synthetic plan: percentages are pure arithmetic, validity not required
    wplan = tuple(loop.moves) * 6 + (loop.moves[0], loop.moves[1]) + \
        (Recharge(1),) * 10 + (Wait(),) * 10
    assert len(wplan) == 70
    cplan = (Wait(),) * 70
    sc = Scenario(
        workspace=scenario.workspace,
        workers=(WorkerSpec("w1", loop, 70),),
        rechargers=scenario.rechargers,
        potential_starts=scenario.potential_starts,
        horizon=71,
        delta_max=4,
    )
    bundle = make_bundle(sc, 71, 71, {"w1": wplan, "c1": cplan}, (), {"c1": Cell(0, 0)})
    report = efficiency(bundle, sc)
    assert report.per_worker["w1"].work_steps == 50
    assert round(report.work_pct, 1) == 71.4
    assert round(report.recharge_pct, 1) == 14.3
    assert report.efficiency == (71 - 10) / 71 * 100.0


def test_replay_hypercycles_ok(tiny):
    scenario, bundle = tiny
    assert replay_hypercycles(bundle, scenario, 3) is None


def test_replay_hypercycles_divergence(tiny):
    scenario, bundle = tiny
    wplan = bundle.plans["w1"][:-1] + (Wait(),)
    broken = make_bundle(
        scenario, 21, 21, {"w1": wplan, "c1": bundle.plans["c1"]},
        bundle.recharge_events[:-1], dict(bundle.recharger_initial),
    )
    assert replay_hypercycles(broken, scenario, 2) == (2, 1)


def test_simulate_zero_delays_matches_nominal(tiny):
    scenario, bundle = tiny
    report = simulate_with_delays(bundle, scenario, ZERO_DELAYS, cycles=3)
    assert report.ok
    assert all(c.makespan == 20 for c in report.cycles)
    assert all(c.inflation == 0 for c in report.cycles)


def test_simulate_recharger_delay_blocks_worker(tiny):
    scenario, bundle = tiny
    # delay the recharger by 2 steps just before the first recharge meeting
    dm = DelayModel(fixed={("c1", 16): 2.0})
    report = simulate_with_delays(bundle, scenario, dm, cycles=2)
    assert report.ok
    assert report.cycles[0].makespan == 22
    assert report.cycles[0].blocked_wait == 2.0
    # fixed delays recur every cycle; states still converge at the sync barrier
    assert report.cycles[1].makespan == 22


def test_simulate_seeded_jitter_converges(tiny):
    scenario, bundle = tiny
    dm = DelayModel(max_jitter=3.0, seed=7)
    report = simulate_with_delays(bundle, scenario, dm, cycles=10)
    assert report.ok
    assert len(report.cycles) == 10
    assert all(c.inflation >= 0 for c in report.cycles)
