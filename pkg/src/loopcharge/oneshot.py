"""Monolithic planner: one optimizing query over the whole hypercycle."""

from __future__ import annotations

import warnings

from .encode import (
    SystemVars,
    encode_system,
    extract_events,
    extract_recharger_initial,
    extract_recharger_plan,
    extract_worker_plan,
)
from .errors import InfeasibleError, SolverTimeout
from .scenario import PlanBundle, Scenario, make_bundle
from .smt import ConstraintProgram, SolverConfig, add, mul, solve


def encode_oneshot(scenario: Scenario) -> tuple[ConstraintProgram, SystemVars]:
    """Full matching query with objectives per the scenario's objective mode."""
    for w in scenario.workers:
        if scenario.horizon < w.loop.closed_length:
            warnings.warn(
                f"worker {w.id}: horizon {scenario.horizon} cannot fit one working loop "
                f"(needs {w.loop.closed_length}); the query is likely infeasible",
                stacklevel=2,
            )
    prog, sv = encode_system(scenario, charge_matching=True, recharger_final=True)
    if scenario.objective_mode == "weighted":
        w1, w2 = scenario.weights
        prog.minimize(add(mul(w1, sv.wait_total), mul(w2, sv.cost_total)))
    else:
        prog.minimize(sv.wait_total)
        prog.minimize(sv.cost_total)
    return prog, sv


def extract_plan(scenario: Scenario, sv: SystemVars, model) -> PlanBundle:
    plans = {}
    for i, spec in enumerate(scenario.workers):
        plans[spec.id] = extract_worker_plan(scenario, sv, model, i)
    for j, spec in enumerate(scenario.rechargers):
        plans[spec.id] = extract_recharger_plan(scenario, sv, model, j)
    return make_bundle(
        scenario,
        horizon=scenario.horizon,
        extended_horizon=sv.horizon,
        plans=plans,
        recharge_events=extract_events(scenario, sv, model),
        recharger_initial=extract_recharger_initial(scenario, sv, model),
    )


def plan_oneshot(scenario: Scenario, config: SolverConfig = SolverConfig()) -> PlanBundle:
    prog, sv = encode_oneshot(scenario)
    outcome = solve(prog, config)
    if outcome.status == "timeout":
        raise SolverTimeout(f"monolithic solve exceeded {config.timeout_secs}s")
    if outcome.status == "unsatisfiable":
        raise InfeasibleError(
            f"no repeatable plan exists for horizon {scenario.horizon}"
        )
    return extract_plan(scenario, sv, outcome.model)
