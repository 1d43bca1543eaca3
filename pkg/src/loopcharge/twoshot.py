"""Two-phase planner: phase 1 minimizes worker waiting over the original
hypercycle with location matching only; phase 2 extends the hypercycle
minimally, re-synthesizing recharger trajectories around the recorded
service waypoints so charge and recharger-location matchings also hold."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .encode import (
    encode_recharger_motion,
    encode_system,
    extract_events,
    extract_recharger_initial,
    extract_recharger_plan,
    extract_worker_plan,
    recharger_cost_sum,
    recharger_step_alts,
    sweep_pair_disjoint,
)
from .errors import InfeasibleError, PlanningError, SolverTimeout
from .kinematics import (
    MotionPrimitive,
    Primitive,
    Recharge,
    Wait,
    recharge_steps_needed,
)
from .scenario import (
    PlanBundle,
    RechargeEvent,
    Scenario,
    _action_to_dict,
    make_bundle,
)
from .smt import (
    ConstraintProgram,
    SolverConfig,
    add,
    and_,
    eq,
    ge,
    gt,
    implies,
    le,
    lt,
    ne,
    not_,
    num,
    or_,
    solve,
)
from .workspace import Cell


@dataclass(frozen=True)
class PhaseOneResult:
    """Everything phase 2 needs: worker plans over the original hypercycle,
    per-recharger service instances (time, serviced worker's cell), the
    synthesized initial cells, and each worker's halt time and refill need."""

    horizon: int
    worker_plans: dict[str, tuple[Primitive, ...]]
    recharger_plans: dict[str, tuple[Primitive, ...]]
    recharge_instances: dict[str, tuple[tuple[int, Cell], ...]]
    residuals: dict[str, tuple[int, int]]  # worker id -> (halt time, refill steps)
    refill_need: dict[str, int]  # worker id -> energy missing at the horizon
    recharger_initial: dict[str, Cell]
    recharge_events: tuple[RechargeEvent, ...]
    wait_total: int

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "worker_plans": {k: [_action_to_dict(a) for a in v]
                             for k, v in sorted(self.worker_plans.items())},
            "recharger_plans": {k: [_action_to_dict(a) for a in v]
                                for k, v in sorted(self.recharger_plans.items())},
            "recharge_instances": {
                k: [[t, list(c)] for t, c in v]
                for k, v in sorted(self.recharge_instances.items())
            },
            "residuals": {k: list(v) for k, v in sorted(self.residuals.items())},
            "refill_need": dict(sorted(self.refill_need.items())),
            "recharger_initial": {k: list(v) for k, v in
                                  sorted(self.recharger_initial.items())},
            "recharge_events": [
                {"t": e.t, "worker": e.worker, "recharger": e.recharger,
                 "delta": e.delta, "cell": list(e.cell)}
                for e in self.recharge_events
            ],
            "wait_total": self.wait_total,
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def phase_one(scenario: Scenario, config: SolverConfig = SolverConfig()) -> PhaseOneResult:
    """Minimize total worker waiting over the original hypercycle.

    Workers must return to their starting cells; charge matching and the
    rechargers' return-to-start are deliberately not enforced here. Among
    wait-minimal plans the recharge-step count is minimized, which maximizes
    the number of completed working loops (the action slots split between
    moves, recharges and the already-fixed waits); gratuitous top-ups would
    otherwise tie with real work.
    """
    prog, sv = encode_system(scenario, charge_matching=False, recharger_final=False)
    prog.minimize(sv.wait_total)
    prog.minimize(sv.recharge_total)
    outcome = solve(prog, config)
    if outcome.status == "timeout":
        raise SolverTimeout(f"phase 1 exceeded {config.timeout_secs}s")
    if outcome.status == "unsatisfiable":
        raise InfeasibleError(_attribute_phase_one_failure(scenario, config))
    model = outcome.model

    worker_plans = {}
    residuals = {}
    refill_need = {}
    for i, spec in enumerate(scenario.workers):
        plan = extract_worker_plan(scenario, sv, model, i)
        worker_plans[spec.id] = plan
        # halt time: earliest time point from which the worker sits at home
        tau = scenario.horizon
        for t in range(scenario.horizon - 1, 0, -1):
            if model[f"w{i}.theta.{t}"] == 1:
                tau = t
            else:
                break
        e_final = model[f"w{i}.e.{scenario.horizon}"]
        need = spec.emax - e_final
        residuals[spec.id] = (tau, recharge_steps_needed(e_final, spec.emax,
                                                         scenario.delta_max))
        refill_need[spec.id] = need

    recharger_plans = {
        spec.id: extract_recharger_plan(scenario, sv, model, j)
        for j, spec in enumerate(scenario.rechargers)
    }
    events = extract_events(scenario, sv, model)
    instances: dict[str, list[tuple[int, Cell]]] = {r.id: [] for r in scenario.rechargers}
    for ev in events:
        instances[ev.recharger].append((ev.t, ev.cell))
    return PhaseOneResult(
        horizon=scenario.horizon,
        worker_plans=worker_plans,
        recharger_plans=recharger_plans,
        recharge_instances={k: tuple(v) for k, v in instances.items()},
        residuals=residuals,
        refill_need=refill_need,
        recharger_initial=extract_recharger_initial(scenario, sv, model),
        recharge_events=events,
        wait_total=outcome.objective_values[0],
    )


def _attribute_phase_one_failure(scenario: Scenario, config: SolverConfig) -> str:
    """Re-solve single-worker subproblems to name the first failing worker."""
    import warnings

    for spec in scenario.workers:
        sub = Scenario(
            workspace=scenario.workspace,
            workers=(spec,),
            rechargers=scenario.rechargers,
            potential_starts=scenario.potential_starts,
            horizon=scenario.horizon,
            delta_max=scenario.delta_max,
            weights=scenario.weights,
            objective_mode=scenario.objective_mode,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prog, sv = encode_system(sub, charge_matching=False, recharger_final=False)
        if solve(prog, config).status == "unsatisfiable":
            return f"phase 1 infeasible: worker {spec.id} cannot be scheduled"
    return "phase 1 infeasible: no joint schedule exists (workers are individually fine)"


# --- phase 2 ------------------------------------------------------------------------


def _worker_geometry(scenario: Scenario, p1: PhaseOneResult,
                     t_prime: int) -> dict[str, list[frozenset[Cell]]]:
    """Constant swept-cell sets per action step 1..t_prime-1 for every worker
    (the home cell alone beyond the original horizon)."""
    out = {}
    for spec in scenario.workers:
        pos = spec.loop.home
        cursor = 1
        n = len(spec.loop.cells)
        sweeps = []
        for act in p1.worker_plans[spec.id]:
            if isinstance(act, MotionPrimitive):
                sweeps.append(frozenset(
                    Cell(pos.x + ox, pos.y + oy) for ox, oy in act.intermediate_offsets
                ))
                cursor = 1 if cursor == n else cursor + 1
                pos = spec.loop.cells[cursor - 1]
            else:
                sweeps.append(frozenset([pos]))
        sweeps.extend([frozenset([spec.loop.home])] * (t_prime - p1.horizon))
        out[spec.id] = sweeps
    return out


def _last_recharge_step(plan: tuple[Primitive, ...]) -> int:
    last = 0
    for t, act in enumerate(plan, start=1):
        if isinstance(act, Recharge):
            last = t
    return last


def encode_phase_two(scenario: Scenario, p1: PhaseOneResult,
                     t_prime: int) -> Optional[tuple[ConstraintProgram, dict]]:
    """Recharger-trajectory query over 1..t_prime with phase-1 waypoints pinned.

    Returns None when some refill block cannot fit this horizon at all.
    """
    T = p1.horizon
    nC = len(scenario.rechargers)
    sweeps = _worker_geometry(scenario, p1, t_prime)
    long_prims = any(len(p.intermediate_offsets) > 2
                     for r in scenario.rechargers for p in r.primitive_set)

    blocks = []  # (worker index, id, duration, window lo, home cell)
    for i, spec in enumerate(scenario.workers):
        tau, d = p1.residuals[spec.id]
        if d == 0:
            continue
        lo = max(tau, _last_recharge_step(p1.worker_plans[spec.id]) + 1)
        if lo > t_prime - d:
            return None
        blocks.append((i, spec.id, d, lo, spec.loop.home))

    prog = ConstraintProgram()
    rx, ry, ract = {}, {}, {}
    for j in range(nC):
        rx[j], ry[j], ract[j] = encode_recharger_motion(prog, scenario, j, t_prime)
        start = p1.recharger_initial[scenario.rechargers[j].id]
        prog.add(and_(eq(rx[j][1], num(start.x)), eq(ry[j][1], num(start.y))))
        prog.add(and_(eq(rx[j][t_prime], num(start.x)), eq(ry[j][t_prime], num(start.y))))

        # pinned intermediate service: wait adjacent to the recorded cell
        for t, cell in p1.recharge_instances[scenario.rechargers[j].id]:
            prog.add(eq(ract[j][t], num(0)))
            prog.add(and_(ge(rx[j][t], num(cell.x - 1)), le(rx[j][t], num(cell.x + 1)),
                          ge(ry[j][t], num(cell.y - 1)), le(ry[j][t], num(cell.y + 1))))

        # workers are moving scenery: never touch their swept cells
        prims = scenario.rechargers[j].primitive_set
        for spec in scenario.workers:
            for t in range(1, t_prime):
                for c in sweeps[spec.id][t - 1]:
                    prog.add(not_(and_(eq(rx[j][t], num(c.x)), eq(ry[j][t], num(c.y)))))
                    prog.add(not_(and_(eq(rx[j][t + 1], num(c.x)),
                                       eq(ry[j][t + 1], num(c.y)))))
                    for k, prim in enumerate(prims, start=1):
                        for ox, oy in prim.intermediate_offsets[1:-1]:
                            prog.add(implies(
                                eq(ract[j][t], num(k)),
                                not_(and_(eq(add(rx[j][t], num(ox)), num(c.x)),
                                          eq(add(ry[j][t], num(oy)), num(c.y)))),
                            ))

    # rechargers avoid each other (vertex and swap conflicts)
    for a in range(nC):
        for b in range(a + 1, nC):
            if long_prims:
                for t in range(1, t_prime):
                    sweep_pair_disjoint(
                        prog,
                        recharger_step_alts(scenario, a, rx[a], ry[a], ract[a], t),
                        recharger_step_alts(scenario, b, rx[b], ry[b], ract[b], t),
                    )
                prog.add(or_(ne(rx[a][t_prime], rx[b][t_prime]),
                             ne(ry[a][t_prime], ry[b][t_prime])))
            else:
                for t in range(1, t_prime + 1):
                    prog.add(or_(ne(rx[a][t], rx[b][t]), ne(ry[a][t], ry[b][t])))
                for t in range(1, t_prime):
                    prog.add(or_(ne(rx[a][t], rx[b][t + 1]), ne(ry[a][t], ry[b][t + 1])))
                    prog.add(or_(ne(rx[a][t + 1], rx[b][t]), ne(ry[a][t + 1], ry[b][t])))

    # final refill blocks: some recharger waits beside the worker's home for d steps
    starts, assigns = {}, {}
    for i, wid, d, lo, home in blocks:
        starts[wid] = prog.new_var(f"refill.start.{i}", lo=lo, hi=t_prime - d)
        row = []
        for j in range(nC):
            a = prog.new_var(f"refill.asg.{i}.{j}", "bool")
            assigns[(wid, j)] = a
            row.append(a)
            for s in range(lo, t_prime - d + 1):
                picked = and_(a, eq(starts[wid], num(s)))
                body = [
                    and_(ge(rx[j][s], num(home.x - 1)), le(rx[j][s], num(home.x + 1)),
                         ge(ry[j][s], num(home.y - 1)), le(ry[j][s], num(home.y + 1))),
                ]
                for u in range(s, s + d):
                    body.append(eq(ract[j][u], num(0)))
                for u in range(s + 1, s + d):
                    body.append(and_(eq(rx[j][u], rx[j][s]), eq(ry[j][u], ry[j][s])))
                prog.add(implies(picked, and_(*body)))
            # a block may not overlap this recharger's pinned service steps
            for t, _cell in p1.recharge_instances[scenario.rechargers[j].id]:
                prog.add(implies(a, or_(gt(starts[wid], num(t)),
                                        lt(add(starts[wid], num(d - 1)), num(t)))))
        prog.add(or_(*row))
        for ja in range(nC):
            for jb in range(ja + 1, nC):
                prog.add(not_(and_(assigns[(wid, ja)], assigns[(wid, jb)])))
    # blocks assigned to the same recharger must not overlap in time
    for x in range(len(blocks)):
        for y in range(x + 1, len(blocks)):
            _, wa, da, _, _ = blocks[x]
            _, wb, db, _, _ = blocks[y]
            for j in range(nC):
                prog.add(implies(
                    and_(assigns[(wa, j)], assigns[(wb, j)]),
                    or_(le(add(starts[wa], num(da)), starts[wb]),
                        le(add(starts[wb], num(db)), starts[wa])),
                ))

    prog.minimize(add(*[recharger_cost_sum(scenario, j, ract[j], t_prime)
                        for j in range(nC)]))
    handles = {"rx": rx, "ry": ry, "ract": ract, "starts": starts,
               "assigns": assigns, "blocks": blocks}
    return prog, handles


def _refill_deltas(need: int, d: int, delta_max: int) -> list[int]:
    # d - 1 full steps plus the remainder, largest first
    rem = need - (d - 1) * delta_max
    return [delta_max] * (d - 1) + [rem]


def _assemble_bundle(scenario: Scenario, p1: PhaseOneResult, t_prime: int,
                     model, handles) -> PlanBundle:
    T = p1.horizon
    pad = t_prime - T
    plans: dict[str, tuple[Primitive, ...]] = {}
    events = list(p1.recharge_events)
    for i, spec in enumerate(scenario.workers):
        plan = list(p1.worker_plans[spec.id]) + [Wait()] * pad
        tau, d = p1.residuals[spec.id]
        if d > 0:
            s = model[f"refill.start.{i}"]
            j_star = next(j for j in range(len(scenario.rechargers))
                          if model[f"refill.asg.{i}.{j}"])
            deltas = _refill_deltas(p1.refill_need[spec.id], d, scenario.delta_max)
            for off, delta in enumerate(deltas):
                idx = s + off - 1
                if not isinstance(plan[idx], Wait):
                    raise PlanningError(
                        f"refill block for {spec.id} would overwrite a non-wait action"
                    )
                plan[idx] = Recharge(delta)
                events.append(RechargeEvent(s + off, spec.id,
                                            scenario.rechargers[j_star].id,
                                            delta, spec.loop.home))
        plans[spec.id] = tuple(plan)
    for j, spec in enumerate(scenario.rechargers):
        rplan: list[Primitive] = []
        prims = spec.primitive_set
        for t in range(1, t_prime):
            a = model[f"c{j}.act.{t}"]
            rplan.append(Wait() if a == 0 else prims[a - 1])
        plans[spec.id] = tuple(rplan)
    events.sort(key=lambda e: (e.t, e.worker))
    return make_bundle(scenario, T, t_prime, plans, tuple(events),
                       dict(p1.recharger_initial))


def phase_two(scenario: Scenario, p1: PhaseOneResult,
              config: SolverConfig = SolverConfig(),
              cap: Optional[int] = None) -> PlanBundle:
    """Find the minimal extended hypercycle: try T, T+1, ... until satisfiable."""
    if cap is None:
        cap = p1.horizon + 4 * max(scenario.workspace.width, scenario.workspace.height)
    for t_prime in range(p1.horizon, cap + 1):
        encoded = encode_phase_two(scenario, p1, t_prime)
        if encoded is None:
            continue
        prog, handles = encoded
        outcome = solve(prog, config)
        if outcome.status == "timeout":
            raise SolverTimeout(f"phase 2 exceeded {config.timeout_secs}s "
                                f"at extension {t_prime}")
        if outcome.status == "unsatisfiable":
            continue
        return _assemble_bundle(scenario, p1, t_prime, outcome.model, handles)
    raise PlanningError(
        f"phase 2 found no satisfiable extension up to {cap} "
        f"(horizon {p1.horizon}); pinned waypoints may be unreachable"
    )


def plan_twoshot(scenario: Scenario, config: SolverConfig = SolverConfig(),
                 cap: Optional[int] = None) -> tuple[PlanBundle, PhaseOneResult]:
    p1 = phase_one(scenario, config)
    return phase_two(scenario, p1, config, cap), p1


def theorem2_condition(scenario: Scenario, bundle: PlanBundle,
                       residuals: dict[str, tuple[int, int]]) -> tuple[bool, dict[str, int]]:
    """Certificate that the two-phase plan is wait-optimal for the extension.

    Holds when every closed working loop is strictly longer than the time the
    extension adds past the worker's halt; the margin per worker is
    ``closed_length - (T' - tau)`` (certified iff all margins are positive).
    """
    margins = {}
    for spec in scenario.workers:
        tau, _ = residuals[spec.id]
        margins[spec.id] = spec.loop.closed_length - (bundle.extended_horizon - tau)
    return all(m > 0 for m in margins.values()), margins
