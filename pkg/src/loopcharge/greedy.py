"""Greedy baseline: availability-triggered nearest-deficient-worker assignment,
simulated over the hypercycle, with a deterministic extension that restores all
matchings.

Policy choices that keep every produced bundle valid: rechargers never enter
any working-loop cell (so worker motion is never blocked and worker-recharger
collisions cannot happen), workers run their loops until they cannot afford
the next move (no partial recharging: a paired worker is refilled to full at
``delta_max`` per step), and a worker winds down at its start cell once another
full traversal no longer fits the hypercycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import PlanningError
from .kinematics import MotionPrimitive, Primitive, Recharge, Wait
from .scenario import PlanBundle, RechargeEvent, Scenario, make_bundle
from .workspace import Cell, Workspace, shortest_path, shortest_travel_time


@dataclass
class _WorkerSim:
    idx: int
    spec: object
    cursor: int = 1
    energy: int = 0
    assigned: Optional[int] = None
    being_served: bool = False
    plan: list = field(default_factory=list)

    @property
    def cell(self) -> Cell:
        return self.spec.loop.cells[self.cursor - 1]

    def next_move(self) -> MotionPrimitive:
        return self.spec.loop.moves[self.cursor - 1]


@dataclass
class _RechargerSim:
    idx: int
    spec: object
    cell: Cell
    start: Cell
    assigned: Optional[int] = None
    route: list = field(default_factory=list)
    plan: list = field(default_factory=list)


def _adjacent(a: Cell, b: Cell) -> bool:
    return abs(a.x - b.x) <= 1 and abs(a.y - b.y) <= 1


class _Greedy:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.T = scenario.horizon
        loop_cells = {c for w in scenario.workers for c in w.loop.cells}
        # rechargers treat every loop cell as terrain: collisions with workers
        # become impossible and worker motion is never blocked
        self.routing_ws: Workspace = scenario.workspace.with_obstacles(loop_cells)
        self.loop_cells = loop_cells
        self.workers = [
            _WorkerSim(i, spec, energy=spec.emax)
            for i, spec in enumerate(scenario.workers)
        ]
        starts = [p for p in scenario.potential_starts if p not in loop_cells]
        if len(starts) < len(scenario.rechargers):
            raise PlanningError(
                "greedy needs one off-loop potential start per recharger; "
                f"only {len(starts)} of {len(scenario.potential_starts)} qualify"
            )
        self.rechargers = [
            _RechargerSim(j, spec, starts[j], starts[j])
            for j, spec in enumerate(scenario.rechargers)
        ]
        self.events: list[RechargeEvent] = []
        self._check_reachability()

    def _check_reachability(self) -> None:
        for w in self.workers:
            targets = self._serving_cells(w.spec.loop.home)
            if not targets:
                raise PlanningError(f"worker {w.spec.id} unreachable: "
                                    "no free off-loop cell adjacent to its start")
            for c in self.rechargers:
                if shortest_travel_time(self.routing_ws, c.start, targets,
                                        c.spec.primitive_set) is not None:
                    break
            else:
                raise PlanningError(
                    f"worker {w.spec.id} unreachable from every recharger start"
                )

    def _serving_cells(self, cell: Cell) -> set[Cell]:
        return {
            c for c in self.scenario.workspace.neighborhood(cell)
            if c != cell and c not in self.loop_cells
        }

    def _routing_for(self, c: _RechargerSim) -> Workspace:
        """Static terrain plus the other rechargers' current cells, so routes
        bend around parked peers instead of butting against them forever."""
        return self.routing_ws.with_obstacles(
            o.cell for o in self.rechargers if o.idx != c.idx
        )

    # --- worker policy -------------------------------------------------------

    def _winds_down(self, w: _WorkerSim, t: int) -> bool:
        n = len(w.spec.loop.cells)
        return w.cursor == 1 and self.T - t < n

    def _wants_move(self, w: _WorkerSim, t: int) -> bool:
        if w.being_served or self._winds_down(w, t):
            return False
        return w.energy >= w.next_move().cost

    def _predict_stop(self, w: _WorkerSim, t: int) -> tuple[int, Cell, int]:
        """(steps until stationary, stop cell, energy there) ignoring service."""
        cursor, energy, step = w.cursor, w.energy, t
        n = len(w.spec.loop.cells)
        for _ in range(self.T + 2 * n + 2):
            at_home_winddown = cursor == 1 and self.T - step < n
            move = w.spec.loop.moves[cursor - 1]
            if at_home_winddown or energy < move.cost:
                return step - t, w.spec.loop.cells[cursor - 1], energy
            energy -= move.cost
            cursor = 1 if cursor == n else cursor + 1
            step += 1
        return step - t, w.spec.loop.cells[cursor - 1], energy

    # --- pairing -------------------------------------------------------------

    def _lambda(self, c: _RechargerSim, w: _WorkerSim, t: int) -> Optional[tuple[int, Cell]]:
        """Steps until recharger c can begin serving worker w, plus w's stop cell."""
        if self._wants_move(w, t):
            until_stop, stop_cell, stop_energy = self._predict_stop(w, t)
            if stop_energy >= w.spec.emax:
                return None
        elif w.energy >= w.spec.emax:
            return None
        else:
            until_stop, stop_cell = 0, w.cell
        targets = self._serving_cells(stop_cell)
        if not targets:
            return None
        travel = shortest_travel_time(self.routing_ws, c.cell, targets,
                                      c.spec.primitive_set)
        if travel is None:
            return None
        return max(until_stop, travel), stop_cell

    def _pair(self, t: int) -> None:
        while True:
            free = [c for c in self.rechargers if c.assigned is None]
            cands = [w for w in self.workers
                     if w.assigned is None and w.energy < w.spec.emax]
            best = None
            for w in cands:
                for c in free:
                    lam = self._lambda(c, w, t)
                    if lam is None:
                        continue
                    key = (lam[0], w.idx, c.idx)
                    if best is None or key < best[0]:
                        best = (key, w, c, lam[1])
            if best is None:
                self._flag_stranded(cands)
                return
            _, w, c, stop_cell = best
            w.assigned = c.idx
            c.assigned = w.idx
            c.route = shortest_path(self._routing_for(c), c.cell,
                                    self._serving_cells(stop_cell),
                                    c.spec.primitive_set) or []

    def _flag_stranded(self, cands) -> None:
        """Fail fast when a halted deficient worker has no statically
        reachable serving seat for any recharger."""
        for w in cands:
            if w.energy >= w.next_move().cost:
                continue  # still mobile, or parked at its verified home
            seats = self._serving_cells(w.cell)
            if not seats:
                raise PlanningError(
                    f"worker {w.spec.id} unreachable: no off-loop seat at {w.cell}"
                )
            for c in self.rechargers:
                if shortest_travel_time(self.routing_ws, c.cell, seats,
                                        c.spec.primitive_set) is not None:
                    return
            raise PlanningError(
                f"worker {w.spec.id} unreachable: halted at {w.cell} with no "
                "recharger able to reach an adjacent seat"
            )

    # --- one step --------------------------------------------------------------

    def _step(self, t: int) -> None:
        self._pair(t)

        worker_actions: list[Primitive] = []
        for w in self.workers:
            if self._wants_move(w, t):
                worker_actions.append(w.next_move())
                continue
            server = self.rechargers[w.assigned] if w.assigned is not None else None
            if (server is not None and not server.route
                    and server.cell in self._serving_cells(w.cell)
                    and w.energy < w.spec.emax):
                delta = min(self.scenario.delta_max, w.spec.emax - w.energy)
                worker_actions.append(Recharge(delta))
                w.being_served = True
                self.events.append(RechargeEvent(t, w.spec.id, server.spec.id,
                                                 delta, w.cell))
            else:
                worker_actions.append(Wait())

        committed: list[frozenset[Cell]] = []
        moves: dict[int, Optional[MotionPrimitive]] = {}
        for c in self.rechargers:
            serving = (c.assigned is not None
                       and isinstance(worker_actions[c.assigned], Recharge))
            if serving or not self._route_or_retarget(c, t):
                moves[c.idx] = None
                committed.append(frozenset([c.cell]))
                continue
            step = c.route[0]
            sweep = frozenset(Cell(c.cell.x + ox, c.cell.y + oy)
                              for ox, oy in step.intermediate_offsets)
            later_cells = {o.cell for o in self.rechargers if o.idx > c.idx}
            if any(sweep & other for other in committed) or (sweep & later_cells):
                # yield this step and look for a fresh route next step
                c.route = []
                moves[c.idx] = None
                committed.append(frozenset([c.cell]))
            else:
                c.route.pop(0)
                moves[c.idx] = step
                committed.append(sweep)

        # commit
        for w, action in zip(self.workers, worker_actions):
            w.plan.append(action)
            if isinstance(action, MotionPrimitive):
                w.energy -= action.cost
                w.cursor = 1 if w.cursor == len(w.spec.loop.cells) else w.cursor + 1
            elif isinstance(action, Recharge):
                w.energy += action.delta
                if w.energy >= w.spec.emax:
                    server = self.rechargers[w.assigned]
                    server.assigned = None
                    server.route = []
                    w.assigned = None
                    w.being_served = False
        for c in self.rechargers:
            step = moves[c.idx]
            if step is None:
                c.plan.append(Wait())
            else:
                c.plan.append(step)
                c.cell = Cell(c.cell.x + step.dx, c.cell.y + step.dy)

    def _route_or_retarget(self, c: _RechargerSim, t: int) -> bool:
        """Ensure c has a route to follow; returns False when it should wait."""
        if c.assigned is not None:
            w = self.workers[c.assigned]
            if not c.route:
                stop_cell = w.cell
                if self._wants_move(w, t):
                    _steps, stop_cell, _e = self._predict_stop(w, t)
                if c.cell in self._serving_cells(stop_cell):
                    return False  # parked at the seat, wait for the worker
                c.route = shortest_path(self._routing_for(c), c.cell,
                                        self._serving_cells(stop_cell),
                                        c.spec.primitive_set) or []
            return bool(c.route)
        if c.cell == c.start:
            return False
        if not c.route:
            c.route = shortest_path(self._routing_for(c), c.cell, {c.start},
                                    c.spec.primitive_set) or []
        return bool(c.route)

    def _matched(self, t: int) -> bool:
        if t < self.T:
            return False
        return all(
            w.cursor == 1 and w.energy == w.spec.emax for w in self.workers
        ) and all(c.cell == c.start for c in self.rechargers)

    def run(self, cap: Optional[int] = None) -> PlanBundle:
        if cap is None:
            cap = self.T + 6 * max(self.scenario.workspace.width,
                                   self.scenario.workspace.height) + 2 * self.T
        t = 1
        while not self._matched(t):
            if t > cap:
                deficient = [w.spec.id for w in self.workers
                             if w.energy < w.spec.emax or w.cursor != 1]
                stray = [c.spec.id for c in self.rechargers if c.cell != c.start]
                raise PlanningError(
                    f"greedy extension did not converge by step {cap}; "
                    f"deficient workers {deficient}, rechargers away {stray}"
                )
            self._step(t)
            t += 1
        plans = {w.spec.id: tuple(w.plan) for w in self.workers}
        plans.update({c.spec.id: tuple(c.plan) for c in self.rechargers})
        return make_bundle(
            self.scenario,
            horizon=self.T,
            extended_horizon=t,
            plans=plans,
            recharge_events=tuple(self.events),
            recharger_initial={c.spec.id: c.start for c in self.rechargers},
        )


def lambda_estimate(scenario: Scenario, recharger_cell: Cell, worker_id: str,
                    worker_cursor: int, worker_energy: int, t: int = 1,
                    recharger_id: Optional[str] = None) -> Optional[int]:
    """Steps until a recharger at ``recharger_cell`` could begin serving the
    given worker state; None when the worker is unreachable or needs nothing."""
    sim = _Greedy(scenario)
    w = next(w for w in sim.workers if w.spec.id == worker_id)
    w.cursor = worker_cursor
    w.energy = worker_energy
    if recharger_id is None:
        c = sim.rechargers[0]
    else:
        c = next(c for c in sim.rechargers if c.spec.id == recharger_id)
    c.cell = recharger_cell
    lam = sim._lambda(c, w, t)
    return None if lam is None else lam[0]


def plan_greedy(scenario: Scenario, cap: Optional[int] = None) -> PlanBundle:
    """Deterministic baseline plan; identical scenarios give identical bundles."""
    return _Greedy(scenario).run(cap)
