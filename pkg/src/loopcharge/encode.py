"""Constraint generation for full-system hypercycle queries.

One encoder serves both the monolithic planner and phase 1 of the two-phase
planner; they differ only in which end-of-horizon matchings are enforced and
which objectives are minimized.

Conventions: time points t run 1..T, actions 1..T-1. Worker actions are
3-valued (move along the loop, wait, recharge); the concrete motion primitive
is determined by the loop cursor. Recharger actions index their primitive set
with 0 reserved for waiting. Cells are coordinate pairs (x, y) in linear
integer arithmetic, so grid-edge wraparound is impossible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kinematics import MotionPrimitive, Recharge, Wait
from .scenario import RechargeEvent, Scenario
from .smt import (
    ConstraintProgram,
    Term,
    add,
    and_,
    eq,
    ge,
    implies,
    ite,
    le,
    lt,
    mul,
    ne,
    not_,
    num,
    or_,
    sub,
)
from .workspace import Cell

ACT_MOVE, ACT_WAIT, ACT_RECHARGE = 0, 1, 2


@dataclass
class SystemVars:
    """Handles to the per-robot variables of an encoded system query."""

    horizon: int
    w_theta: list[dict[int, Term]] = field(default_factory=list)
    w_energy: list[dict[int, Term]] = field(default_factory=list)
    w_act: list[dict[int, Term]] = field(default_factory=list)
    w_delta: list[dict[int, Term]] = field(default_factory=list)
    w_x: list[dict[int, Term]] = field(default_factory=list)
    w_y: list[dict[int, Term]] = field(default_factory=list)
    r_x: list[dict[int, Term]] = field(default_factory=list)
    r_y: list[dict[int, Term]] = field(default_factory=list)
    r_act: list[dict[int, Term]] = field(default_factory=list)
    serve: dict[tuple[int, int, int], Term] = field(default_factory=dict)
    wait_total: Term = num(0)
    cost_total: Term = num(0)
    recharge_total: Term = num(0)


def _all_simple(scenario: Scenario) -> bool:
    """True when every primitive sweeps only its start and end cells."""
    for spec in list(scenario.workers) + list(scenario.rechargers):
        for prim in spec.primitive_set:
            if len(prim.intermediate_offsets) > 2:
                return False
    return True


def encode_system(
    scenario: Scenario,
    *,
    charge_matching: bool = True,
    recharger_final: bool = True,
) -> tuple[ConstraintProgram, SystemVars]:
    """Encode initial, transition and final constraints for every robot.

    Objectives are not attached here; callers minimize the returned wait/cost
    totals according to their objective mode.
    """
    T = scenario.horizon
    ws = scenario.workspace
    prog = ConstraintProgram()
    sv = SystemVars(horizon=T)
    obstacles = sorted(ws.obstacles)
    simple = _all_simple(scenario)

    # --- workers ---------------------------------------------------------------
    for i, spec in enumerate(scenario.workers):
        loop = spec.loop
        n = len(loop.cells)
        theta = {t: prog.new_var(f"w{i}.theta.{t}", lo=1, hi=n) for t in range(1, T + 1)}
        energy = {t: prog.new_var(f"w{i}.e.{t}", lo=0, hi=spec.emax) for t in range(1, T + 1)}
        act = {t: prog.new_var(f"w{i}.act.{t}", lo=ACT_MOVE, hi=ACT_RECHARGE)
               for t in range(1, T)}
        delta = {t: prog.new_var(f"w{i}.delta.{t}", lo=0, hi=scenario.delta_max)
                 for t in range(1, T)}
        px = {t: prog.new_var(f"w{i}.x.{t}", lo=0, hi=ws.width - 1) for t in range(1, T + 1)}
        py = {t: prog.new_var(f"w{i}.y.{t}", lo=0, hi=ws.height - 1) for t in range(1, T + 1)}
        sv.w_theta.append(theta)
        sv.w_energy.append(energy)
        sv.w_act.append(act)
        sv.w_delta.append(delta)
        sv.w_x.append(px)
        sv.w_y.append(py)

        # position mirrors the cursor
        for t in range(1, T + 1):
            for k in range(1, n + 1):
                cell = loop.cells[k - 1]
                prog.add(implies(eq(theta[t], num(k)),
                                 and_(eq(px[t], num(cell.x)), eq(py[t], num(cell.y)))))

        # initial: home with full charge; the first action is the first loop
        # move whenever one closed traversal fits the horizon at all
        prog.add(eq(theta[1], num(1)))
        prog.add(eq(energy[1], num(spec.emax)))
        if T >= loop.closed_length:
            prog.add(eq(act[1], num(ACT_MOVE)))

        for t in range(1, T):
            move = eq(act[t], num(ACT_MOVE))
            stay = ne(act[t], num(ACT_MOVE))
            for k in range(1, n + 1):
                nxt = 1 if k == n else k + 1
                cost = loop.moves[k - 1].cost
                prog.add(implies(and_(move, eq(theta[t], num(k))),
                                 and_(eq(theta[t + 1], num(nxt)),
                                      eq(energy[t + 1], sub(energy[t], num(cost))))))
            prog.add(implies(stay, eq(theta[t + 1], theta[t])))
            prog.add(implies(eq(act[t], num(ACT_WAIT)),
                             and_(eq(energy[t + 1], energy[t]), eq(delta[t], num(0)))))
            prog.add(implies(move, eq(delta[t], num(0))))
            prog.add(implies(eq(act[t], num(ACT_RECHARGE)),
                             and_(lt(energy[t], num(spec.emax)),
                                  ge(delta[t], num(1)),
                                  eq(energy[t + 1], add(energy[t], delta[t])))))

        # final: position matching always, charge matching for the monolithic query
        prog.add(eq(theta[T], num(1)))
        if charge_matching:
            prog.add(eq(energy[T], num(spec.emax)))

        # implied global structure (sound cuts): motion steps come in whole
        # loops because the cursor starts and ends at 1, and the energy budget
        # caps how many loops the recharge steps can pay for
        loops_var = prog.new_var(f"w{i}.loops", lo=0, hi=(T - 1) // n)
        moves_count = add(*[ite(eq(act[t], num(ACT_MOVE)), num(1), num(0))
                            for t in range(1, T)])
        recharge_count = add(*[ite(eq(act[t], num(ACT_RECHARGE)), num(1), num(0))
                               for t in range(1, T)])
        prog.add(eq(moves_count, mul(n, loops_var)))
        if loop.total_cost > 0:
            prog.add(le(mul(loop.total_cost, loops_var),
                        add(num(spec.emax), mul(scenario.delta_max, recharge_count))))

    # --- rechargers ------------------------------------------------------------
    for j, spec in enumerate(scenario.rechargers):
        rx, ry, ract = encode_recharger_motion(prog, scenario, j, T)
        sv.r_x.append(rx)
        sv.r_y.append(ry)
        sv.r_act.append(ract)

        prog.add(or_(*[and_(eq(rx[1], num(p.x)), eq(ry[1], num(p.y)))
                       for p in scenario.potential_starts]))
        if recharger_final:
            prog.add(and_(eq(rx[T], rx[1]), eq(ry[T], ry[1])))

    # distinct initial cells for rechargers; interchangeable rechargers are
    # additionally ordered by initial cell id to break the permutation symmetry
    for a in range(len(scenario.rechargers)):
        for b in range(a + 1, len(scenario.rechargers)):
            if scenario.rechargers[a].primitive_set == scenario.rechargers[b].primitive_set:
                prog.add(lt(add(mul(ws.width, sv.r_y[a][1]), sv.r_x[a][1]),
                            add(mul(ws.width, sv.r_y[b][1]), sv.r_x[b][1])))
            else:
                prog.add(or_(ne(sv.r_x[a][1], sv.r_x[b][1]),
                             ne(sv.r_y[a][1], sv.r_y[b][1])))

    # --- recharge enablement -----------------------------------------------------
    nW, nC = len(scenario.workers), len(scenario.rechargers)
    for i in range(nW):
        for t in range(1, T):
            servers = []
            for j in range(nC):
                s = prog.new_var(f"serve.{i}.{j}.{t}", "bool")
                sv.serve[(i, j, t)] = s
                servers.append(s)
                prog.add(implies(s, eq(sv.w_act[i][t], num(ACT_RECHARGE))))
                prog.add(implies(s, eq(sv.r_act[j][t], num(0))))
                prog.add(implies(s, and_(
                    le(sub(sv.r_x[j][t], sv.w_x[i][t]), num(1)),
                    le(sub(sv.w_x[i][t], sv.r_x[j][t]), num(1)),
                    le(sub(sv.r_y[j][t], sv.w_y[i][t]), num(1)),
                    le(sub(sv.w_y[i][t], sv.r_y[j][t]), num(1)),
                )))
            prog.add(implies(eq(sv.w_act[i][t], num(ACT_RECHARGE)), or_(*servers)))
            for a in range(nC):
                for b in range(a + 1, nC):
                    prog.add(not_(and_(sv.serve[(i, a, t)], sv.serve[(i, b, t)])))
    for j in range(nC):
        for t in range(1, T):
            for a in range(nW):
                for b in range(a + 1, nW):
                    prog.add(not_(and_(sv.serve[(a, j, t)], sv.serve[(b, j, t)])))

    # --- collision avoidance ------------------------------------------------------
    pairs = [("r", j, "w", i) for j in range(nC) for i in range(nW)]
    pairs += [("r", a, "r", b) for a in range(nC) for b in range(a + 1, nC)]

    def pos(kind: str, idx: int, t: int) -> tuple[Term, Term]:
        if kind == "w":
            return sv.w_x[idx][t], sv.w_y[idx][t]
        return sv.r_x[idx][t], sv.r_y[idx][t]

    if simple:
        for ka, ia, kb, ib in pairs:
            for t in range(1, T + 1):
                ax, ay = pos(ka, ia, t)
                bx, by = pos(kb, ib, t)
                prog.add(or_(ne(ax, bx), ne(ay, by)))
            for t in range(1, T):
                ax, ay = pos(ka, ia, t)
                bx, by = pos(kb, ib, t + 1)
                prog.add(or_(ne(ax, bx), ne(ay, by)))
                ax, ay = pos(ka, ia, t + 1)
                bx, by = pos(kb, ib, t)
                prog.add(or_(ne(ax, bx), ne(ay, by)))
    else:
        _encode_sweep_collisions(prog, sv, scenario, pairs)

    # --- objectives ---------------------------------------------------------------
    waits = []
    recharges = []
    for i in range(nW):
        for t in range(1, T):
            waits.append(ite(eq(sv.w_act[i][t], num(ACT_WAIT)), num(1), num(0)))
            recharges.append(ite(eq(sv.w_act[i][t], num(ACT_RECHARGE)), num(1), num(0)))
    sv.wait_total = add(*waits)
    sv.recharge_total = add(*recharges)
    sv.cost_total = add(*[recharger_cost_sum(scenario, j, sv.r_act[j], T)
                          for j in range(nC)])
    return prog, sv


def encode_recharger_motion(prog: ConstraintProgram, scenario: Scenario, j: int,
                            horizon: int) -> tuple[dict, dict, dict]:
    """Position/action variables plus transition and obstacle constraints for
    recharger ``j`` over 1..horizon. Waiting is action 0."""
    ws = scenario.workspace
    prims = scenario.rechargers[j].primitive_set
    obstacles = sorted(ws.obstacles)
    rx = {t: prog.new_var(f"c{j}.x.{t}", lo=0, hi=ws.width - 1)
          for t in range(1, horizon + 1)}
    ry = {t: prog.new_var(f"c{j}.y.{t}", lo=0, hi=ws.height - 1)
          for t in range(1, horizon + 1)}
    ract = {t: prog.new_var(f"c{j}.act.{t}", lo=0, hi=len(prims))
            for t in range(1, horizon)}
    for t in range(1, horizon):
        prog.add(implies(eq(ract[t], num(0)),
                         and_(eq(rx[t + 1], rx[t]), eq(ry[t + 1], ry[t]))))
        for k, prim in enumerate(prims, start=1):
            prog.add(implies(eq(ract[t], num(k)),
                             and_(eq(rx[t + 1], add(rx[t], num(prim.dx))),
                                  eq(ry[t + 1], add(ry[t], num(prim.dy))))))
            # interior sweep cells of long primitives must dodge obstacles
            for ox, oy in prim.intermediate_offsets[1:-1]:
                for obs in obstacles:
                    prog.add(implies(eq(ract[t], num(k)),
                                     not_(and_(eq(add(rx[t], num(ox)), num(obs.x)),
                                               eq(add(ry[t], num(oy)), num(obs.y))))))
    for t in range(1, horizon + 1):
        for obs in obstacles:
            prog.add(not_(and_(eq(rx[t], num(obs.x)), eq(ry[t], num(obs.y)))))
    return rx, ry, ract


def recharger_cost_sum(scenario: Scenario, j: int, ract: dict, horizon: int) -> Term:
    """Total motion cost of recharger ``j`` as a nested-ite sum."""
    prims = scenario.rechargers[j].primitive_set
    costs = []
    for t in range(1, horizon):
        term: Term = num(0)
        for k, prim in reversed(list(enumerate(prims, start=1))):
            term = ite(eq(ract[t], num(k)), num(prim.cost), term)
        costs.append(term)
    return add(*costs)


def _worker_sweeps(scenario: Scenario, i: int):
    """(condition-kind, theta, offsets) descriptors for worker i's step sweeps."""
    loop = scenario.workers[i].loop
    out = []
    for k in range(1, len(loop.cells) + 1):
        out.append((k, loop.moves[k - 1].intermediate_offsets))
    return out


def sweep_pair_disjoint(prog: ConstraintProgram, alts_a, alts_b) -> None:
    """Assert two robots' step sweeps never share a cell.

    Each alternative is (guard, x-term, y-term, offsets); under both guards,
    every offset pair must land on different cells.
    """
    for ga, xa, ya, offs_a in alts_a:
        for gb, xb, yb, offs_b in alts_b:
            disjoint = []
            for oax, oay in offs_a:
                for obx, oby in offs_b:
                    disjoint.append(or_(
                        ne(add(xa, num(oax)), add(xb, num(obx))),
                        ne(add(ya, num(oay)), add(yb, num(oby))),
                    ))
            prog.add(implies(and_(ga, gb), and_(*disjoint)))


def recharger_step_alts(scenario: Scenario, j: int, rx, ry, ract, t: int):
    """Sweep descriptors for recharger ``j``'s step ``t``."""
    x, y = rx[t], ry[t]
    alts = [(eq(ract[t], num(0)), x, y, ((0, 0),))]
    for k, prim in enumerate(scenario.rechargers[j].primitive_set, start=1):
        alts.append((eq(ract[t], num(k)), x, y, prim.intermediate_offsets))
    return alts


def _encode_sweep_collisions(prog, sv: SystemVars, scenario: Scenario, pairs) -> None:
    """General collision encoding over full intermediate-cell sets.

    Used when some primitive sweeps more than its endpoints; conditions on the
    acting primitives (and the loop cursor for workers) and forbids any shared
    swept cell.
    """
    T = sv.horizon

    def descriptors(kind: str, idx: int, t: int):
        if kind == "w":
            x, y = sv.w_x[idx][t], sv.w_y[idx][t]
            stay = ne(sv.w_act[idx][t], num(ACT_MOVE))
            alts = [(stay, x, y, ((0, 0),))]
            for k, offs in _worker_sweeps(scenario, idx):
                guard = and_(eq(sv.w_act[idx][t], num(ACT_MOVE)),
                             eq(sv.w_theta[idx][t], num(k)))
                alts.append((guard, x, y, offs))
            return alts
        return recharger_step_alts(scenario, idx, sv.r_x[idx], sv.r_y[idx],
                                   sv.r_act[idx], t)

    for ka, ia, kb, ib in pairs:
        for t in range(1, T):
            sweep_pair_disjoint(prog, descriptors(ka, ia, t), descriptors(kb, ib, t))
        # final time point: plain vertex disjointness
        ax, ay = (sv.w_x[ia][T], sv.w_y[ia][T]) if ka == "w" else (sv.r_x[ia][T], sv.r_y[ia][T])
        bx, by = (sv.w_x[ib][T], sv.w_y[ib][T]) if kb == "w" else (sv.r_x[ib][T], sv.r_y[ib][T])
        prog.add(or_(ne(ax, bx), ne(ay, by)))


# --- model extraction ---------------------------------------------------------------


def extract_worker_plan(scenario: Scenario, sv: SystemVars, model, i: int):
    spec = scenario.workers[i]
    plan = []
    for t in range(1, sv.horizon):
        a = model[f"w{i}.act.{t}"]
        if a == ACT_MOVE:
            plan.append(spec.loop.moves[model[f"w{i}.theta.{t}"] - 1])
        elif a == ACT_WAIT:
            plan.append(Wait())
        else:
            plan.append(Recharge(model[f"w{i}.delta.{t}"]))
    return tuple(plan)


def extract_recharger_plan(scenario: Scenario, sv: SystemVars, model, j: int):
    prims = scenario.rechargers[j].primitive_set
    plan = []
    for t in range(1, sv.horizon):
        a = model[f"c{j}.act.{t}"]
        plan.append(Wait() if a == 0 else prims[a - 1])
    return tuple(plan)


def extract_events(scenario: Scenario, sv: SystemVars, model) -> tuple[RechargeEvent, ...]:
    events = []
    for t in range(1, sv.horizon):
        for i, wspec in enumerate(scenario.workers):
            if model[f"w{i}.act.{t}"] != ACT_RECHARGE:
                continue
            for j, rspec in enumerate(scenario.rechargers):
                if model[f"serve.{i}.{j}.{t}"]:
                    cell = wspec.loop.cells[model[f"w{i}.theta.{t}"] - 1]
                    events.append(RechargeEvent(t, wspec.id, rspec.id,
                                                model[f"w{i}.delta.{t}"], cell))
                    break
    return tuple(events)


def extract_recharger_initial(scenario: Scenario, sv: SystemVars, model) -> dict[str, Cell]:
    return {
        spec.id: Cell(model[f"c{j}.x.1"], model[f"c{j}.y.1"])
        for j, spec in enumerate(scenario.rechargers)
    }
