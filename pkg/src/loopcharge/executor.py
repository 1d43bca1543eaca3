"""Lock-step plan replay: validity checks, efficiency metrics, hypercycle repetition,
and the delay-tolerant synchronization simulation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import PreconditionError
from .kinematics import (
    LoopCursor,
    MotionPrimitive,
    Primitive,
    Recharge,
    RobotState,
    Wait,
    advance_cursor,
    apply,
)
from .scenario import PlanBundle, RechargeEvent, Scenario
from .workspace import Cell


@dataclass(frozen=True)
class Violation:
    robot: str
    step: int
    clause: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"robot": self.robot, "step": self.step, "clause": self.clause,
                "detail": self.detail}


def _swept(at: Cell, action: Primitive) -> frozenset[Cell]:
    if isinstance(action, MotionPrimitive):
        return frozenset(Cell(at.x + ox, at.y + oy) for ox, oy in action.intermediate_offsets)
    return frozenset([at])


def validate(bundle: PlanBundle, scenario: Scenario) -> list[Violation]:
    """Replay every plan step-by-step and collect all rule violations.

    An empty list means the bundle is a valid repeatable hypercycle: every
    transition satisfies its primitive's pre/postconditions, recharges are
    backed by an adjacent waiting recharger (one worker per recharger per
    step), no intermediate cell is shared or blocked, and all end-of-horizon
    matchings hold.
    """
    out: list[Violation] = []
    ws = scenario.workspace
    t_prime = bundle.extended_horizon
    n_actions = t_prime - 1

    worker_ids = [w.id for w in scenario.workers]
    recharger_ids = [r.id for r in scenario.rechargers]
    for rid in worker_ids + recharger_ids:
        if rid not in bundle.plans:
            out.append(Violation(rid, 0, "missing plan"))
        elif len(bundle.plans[rid]) != n_actions:
            out.append(Violation(rid, 0, "plan length",
                                 f"{len(bundle.plans[rid])} != {n_actions}"))
    if out:
        return out

    events_by_worker: dict[tuple[str, int], RechargeEvent] = {}
    events_by_recharger: dict[tuple[str, int], RechargeEvent] = {}
    for ev in bundle.recharge_events:
        if (ev.worker, ev.t) in events_by_worker:
            out.append(Violation(ev.worker, ev.t, "duplicate recharge event"))
        events_by_worker[(ev.worker, ev.t)] = ev
        if (ev.recharger, ev.t) in events_by_recharger:
            out.append(Violation(ev.recharger, ev.t, "recharger serves two workers"))
        events_by_recharger[(ev.recharger, ev.t)] = ev

    # Recharger replay: position bookkeeping only (rechargers carry no battery model).
    rpos: dict[str, list[Cell]] = {}
    for spec in scenario.rechargers:
        rid = spec.id
        init = bundle.recharger_initial.get(rid)
        if init is None:
            out.append(Violation(rid, 1, "missing initial cell"))
            continue
        if init not in scenario.potential_starts:
            out.append(Violation(rid, 1, "initial cell not a potential start", str(init)))
        cells = [init]
        traj = bundle.trajectories.get(rid)
        if traj and traj[0].p != init:
            out.append(Violation(rid, 1, "trajectory does not start at initial cell"))
        allowed = set(spec.primitive_set)
        for t, action in enumerate(bundle.plans[rid], start=1):
            cur = cells[-1]
            if isinstance(action, Recharge):
                out.append(Violation(rid, t, "recharger cannot execute recharge"))
                action = Wait()
            elif isinstance(action, MotionPrimitive) and action not in allowed:
                out.append(Violation(rid, t, "primitive not in recharger's set", action.name))
            for c in _swept(cur, action):
                if not ws.is_free(c):
                    out.append(Violation(rid, t, "blocked cell", str(c)))
            if isinstance(action, MotionPrimitive):
                cur = Cell(cur.x + action.dx, cur.y + action.dy)
            cells.append(cur)
        rpos[rid] = cells
        if traj and [st.p for st in traj] != cells:
            out.append(Violation(rid, 0, "trajectory mismatch"))
        if cells[-1] != init:
            out.append(Violation(rid, t_prime, "recharger position matching",
                                 f"{cells[-1]} != {init}"))

    # Worker replay under full primitive semantics.
    wstates: dict[str, list[RobotState]] = {}
    for spec in scenario.workers:
        rid = spec.id
        loop = spec.loop
        state = RobotState(loop.home, e=spec.emax)
        traj = bundle.trajectories.get(rid)
        if traj and traj[0] != state:
            out.append(Violation(rid, 1, "initial state",
                                 f"{traj[0]} != home with full charge"))
        states = [state]
        cursor = LoopCursor(1)
        for t, action in enumerate(bundle.plans[rid], start=1):
            if isinstance(action, MotionPrimitive):
                expected = loop.moves[cursor.index - 1]
                if action != expected:
                    out.append(Violation(rid, t, "loop order",
                                         f"{action.name} != {expected.name}"))
                    action = expected
                cursor = LoopCursor(1 if cursor.index == len(loop.cells) else cursor.index + 1)
            elif isinstance(action, Recharge):
                ev = events_by_worker.get((rid, t))
                if ev is None:
                    out.append(Violation(rid, t, "recharge without recharger",
                                         "no recharge event recorded"))
                else:
                    if ev.cell != state.p:
                        out.append(Violation(rid, t, "recharge event cell", str(ev.cell)))
                    if ev.delta != action.delta:
                        out.append(Violation(rid, t, "recharge event amount"))
                    serving = rpos.get(ev.recharger)
                    if serving is None:
                        out.append(Violation(rid, t, "recharge event names unknown recharger",
                                             ev.recharger))
                    else:
                        if serving[t - 1] not in ws.neighborhood(state.p) or serving[t - 1] == state.p:
                            out.append(Violation(rid, t, "recharge without recharger",
                                                 f"{ev.recharger} at {serving[t - 1]}"))
                        if not isinstance(bundle.plans[ev.recharger][t - 1], Wait):
                            out.append(Violation(rid, t, "serving recharger not waiting",
                                                 ev.recharger))
            for c in _swept(state.p, action):
                if not ws.is_free(c):
                    out.append(Violation(rid, t, "blocked cell", str(c)))
            try:
                state = apply(state, action, spec.emax, scenario.delta_max)
            except PreconditionError as exc:
                out.append(Violation(rid, t, exc.clause))
                break
            states.append(state)
        wstates[rid] = states
        if len(states) == t_prime:
            if traj and traj != tuple(states):
                out.append(Violation(rid, 0, "trajectory mismatch"))
            final = states[-1]
            if final.p != loop.home:
                out.append(Violation(rid, t_prime, "position matching", str(final.p)))
            if final.e != spec.emax:
                out.append(Violation(rid, t_prime, "charge matching",
                                     f"e={final.e} != emax={spec.emax}"))

    # A worker recharge event must point at a step the worker actually recharges.
    for (wid, t), ev in events_by_worker.items():
        if wid not in bundle.plans or t < 1 or t > n_actions:
            out.append(Violation(wid, t, "recharge event outside plan"))
        elif not isinstance(bundle.plans[wid][t - 1], Recharge):
            out.append(Violation(wid, t, "recharge event without recharge action"))

    # Pairwise collision freedom on intermediate sets, every step.
    all_ids = worker_ids + recharger_ids
    occupied: dict[str, list[frozenset[Cell]]] = {}
    for rid in all_ids:
        if rid in wstates and len(wstates[rid]) != t_prime:
            continue  # replay aborted; already reported
        cells = [st.p for st in wstates[rid]] if rid in wstates else rpos.get(rid)
        if cells is None:
            continue
        occupied[rid] = [
            _swept(cells[t], bundle.plans[rid][t]) for t in range(n_actions)
        ] + [frozenset([cells[-1]])]
    for a_idx in range(len(all_ids)):
        for b_idx in range(a_idx + 1, len(all_ids)):
            a, b = all_ids[a_idx], all_ids[b_idx]
            if a not in occupied or b not in occupied:
                continue
            for t in range(n_actions):
                shared = occupied[a][t] & occupied[b][t]
                if shared:
                    out.append(Violation(a, t + 1, "collision",
                                         f"with {b} at {sorted(shared)}"))
    return out


@dataclass(frozen=True)
class WorkerBreakdown:
    work_steps: int
    recharge_steps: int
    wait_steps: int
    loops_completed: int


@dataclass(frozen=True)
class EfficiencyReport:
    """Wait/cost totals and the efficiency percentage over the extended hypercycle.

    ``efficiency`` uses the extended horizon; ``efficiency_original`` restates
    the figure over the original horizon for comparison. The percentage split
    divides the actual action slots (one per robot per step).
    """

    total_wait: int
    recharger_cost: int
    per_worker: dict[str, WorkerBreakdown]
    efficiency: float
    efficiency_original: float
    work_pct: float
    recharge_pct: float
    wait_pct: float
    horizon: int
    extended_horizon: int

    def to_dict(self) -> dict:
        return {
            "total_wait": self.total_wait,
            "recharger_cost": self.recharger_cost,
            "per_worker": {
                k: vars(v) for k, v in sorted(self.per_worker.items())
            },
            "efficiency": self.efficiency,
            "efficiency_original": self.efficiency_original,
            "work_pct": self.work_pct,
            "recharge_pct": self.recharge_pct,
            "wait_pct": self.wait_pct,
            "horizon": self.horizon,
            "extended_horizon": self.extended_horizon,
        }


def efficiency(bundle: PlanBundle, scenario: Scenario) -> EfficiencyReport:
    """Pure arithmetic over the bundle's plans; no validity checking."""
    t_prime = bundle.extended_horizon
    per_worker = {}
    total_wait = wait_original = 0
    for spec in scenario.workers:
        plan = bundle.plans[spec.id]
        work = sum(1 for a in plan if isinstance(a, MotionPrimitive))
        rech = sum(1 for a in plan if isinstance(a, Recharge))
        wait = sum(1 for a in plan if isinstance(a, Wait))
        total_wait += wait
        wait_original += sum(
            1 for t, a in enumerate(plan, start=1)
            if t <= bundle.horizon - 1 and isinstance(a, Wait)
        )
        per_worker[spec.id] = WorkerBreakdown(
            work, rech, wait, work // len(spec.loop.cells)
        )
    cost = 0
    for spec in scenario.rechargers:
        cost += sum(a.cost for a in bundle.plans[spec.id] if isinstance(a, MotionPrimitive))
    n = len(scenario.workers)
    slots = n * (t_prime - 1)
    total_work = sum(b.work_steps for b in per_worker.values())
    total_rech = sum(b.recharge_steps for b in per_worker.values())
    return EfficiencyReport(
        total_wait=total_wait,
        recharger_cost=cost,
        per_worker=per_worker,
        efficiency=(n * t_prime - total_wait) / (n * t_prime) * 100.0,
        efficiency_original=(n * bundle.horizon - wait_original)
        / (n * bundle.horizon) * 100.0,
        work_pct=total_work / slots * 100.0,
        recharge_pct=total_rech / slots * 100.0,
        wait_pct=total_wait / slots * 100.0,
        horizon=bundle.horizon,
        extended_horizon=t_prime,
    )


def _step_states(bundle: PlanBundle, scenario: Scenario, cur: dict[str, RobotState],
                 t: int) -> dict[str, RobotState]:
    """Advance every robot by its action at step ``t`` (1-based)."""
    emax = {w.id: w.emax for w in scenario.workers}
    nxt = {}
    for rid, plan in bundle.plans.items():
        state = cur[rid]
        action = plan[t - 1]
        if rid in emax:
            nxt[rid] = apply(state, action, emax[rid], scenario.delta_max)
        elif isinstance(action, MotionPrimitive):
            nxt[rid] = RobotState(Cell(state.p.x + action.dx, state.p.y + action.dy), 0, state.e)
        else:
            nxt[rid] = state
    return nxt


def replay_hypercycles(bundle: PlanBundle, scenario: Scenario,
                       k: int) -> Optional[tuple[int, int]]:
    """Replay the bundle ``k`` times back-to-back.

    Returns None when every cycle reproduces the first cycle's state sequence,
    else (cycle, step) of the first divergence.
    """
    current = {rid: traj[0] for rid, traj in bundle.trajectories.items()}
    reference: list[dict[str, RobotState]] = []
    for cycle in range(1, k + 1):
        if cycle > 1 and current != reference[0]:
            return (cycle, 1)
        states = [current]
        for t in range(1, bundle.extended_horizon):
            try:
                nxt = _step_states(bundle, scenario, states[-1], t)
            except PreconditionError:
                return (cycle, t)
            if cycle > 1 and nxt != reference[t]:
                return (cycle, t + 1)
            states.append(nxt)
        if cycle == 1:
            reference = states
        current = states[-1]
    return None


# --- delay-uncertainty synchronization simulation ---------------------------------


@dataclass(frozen=True)
class DelayModel:
    """Per-robot per-step completion delays, in fractional steps (>= 0).

    ``fixed`` maps (robot, step) to a delay applied in every cycle; jitter adds
    a seeded uniform draw in [0, max_jitter] per robot, cycle and step.
    """

    fixed: dict[tuple[str, int], float] = field(default_factory=dict)
    max_jitter: float = 0.0
    seed: int = 0

    def delays_for_cycle(self, robots: list[str], n_steps: int,
                         cycle: int) -> dict[tuple[str, int], float]:
        rng = random.Random(self.seed * 1_000_003 + cycle)
        out = {}
        for rid in robots:
            for t in range(1, n_steps + 1):
                jitter = rng.uniform(0.0, self.max_jitter) if self.max_jitter > 0 else 0.0
                out[(rid, t)] = self.fixed.get((rid, t), 0.0) + jitter
        return out


ZERO_DELAYS = DelayModel()


@dataclass(frozen=True)
class CycleStats:
    makespan: float
    inflation: float
    sync_time: float
    blocked_wait: float


@dataclass(frozen=True)
class SyncReport:
    cycles: list[CycleStats]
    deadlock: Optional[dict[str, str]]
    states_match_nominal: bool

    @property
    def ok(self) -> bool:
        return self.deadlock is None and self.states_match_nominal

    def to_dict(self) -> dict:
        return {
            "cycles": [vars(c) for c in self.cycles],
            "deadlock": self.deadlock,
            "states_match_nominal": self.states_match_nominal,
            "ok": self.ok,
        }


def simulate_with_delays(bundle: PlanBundle, scenario: Scenario, dm: DelayModel,
                         cycles: int) -> SyncReport:
    """Event-driven replay under motion delays with the end-of-cycle sync barrier.

    At every recharge step the worker and its serving recharger block until
    both have arrived, and neither leaves before the step completes for both.
    After finishing its plan (back at its initial cell) each recharger
    broadcasts a sync message; every robot starts the next cycle once all |C|
    messages are out and its own plan is finished.
    """
    robots = sorted(bundle.plans.keys())
    recharger_ids = [r.id for r in scenario.rechargers]
    n_steps = bundle.extended_horizon - 1
    pair_of: dict[tuple[str, int], str] = {}
    for ev in bundle.recharge_events:
        pair_of[(ev.worker, ev.t)] = ev.recharger
        pair_of[(ev.recharger, ev.t)] = ev.worker

    # Divergence in discrete state is timing-independent; verify against nominal replay.
    states_ok = replay_hypercycles(bundle, scenario, cycles) is None

    cycle_stats: list[CycleStats] = []
    ready = {rid: 0.0 for rid in robots}
    for cycle in range(1, cycles + 1):
        delays = dm.delays_for_cycle(robots, n_steps, cycle)
        cycle_start = {rid: ready[rid] for rid in robots}
        next_step = {rid: 1 for rid in robots}
        blocked_wait = 0.0
        while any(next_step[rid] <= n_steps for rid in robots):
            progressed = False
            for rid in robots:
                t = next_step[rid]
                if t > n_steps:
                    continue
                partner = pair_of.get((rid, t))
                if partner is not None:
                    # rendezvous: both sides must be parked at this step
                    if next_step.get(partner) != t:
                        continue
                    start = max(ready[rid], ready[partner])
                    blocked_wait += (start - ready[rid]) + (start - ready[partner])
                    end = start + 1 + max(delays[(rid, t)], delays[(partner, t)])
                    ready[rid] = ready[partner] = end
                    next_step[rid] += 1
                    next_step[partner] += 1
                else:
                    ready[rid] = ready[rid] + 1 + delays[(rid, t)]
                    next_step[rid] += 1
                progressed = True
            if not progressed:
                blocked = {
                    rid: f"waiting for {pair_of[(rid, next_step[rid])]}"
                    for rid in robots
                    if next_step[rid] <= n_steps
                }
                return SyncReport(cycle_stats, blocked, states_ok)
        sync_time = max(ready[rid] for rid in recharger_ids)
        makespan = max(ready.values()) - min(cycle_start.values())
        cycle_stats.append(
            CycleStats(makespan, makespan - n_steps, sync_time, blocked_wait)
        )
        ready = {rid: max(ready[rid], sync_time) for rid in robots}
    return SyncReport(cycle_stats, None, states_ok)
