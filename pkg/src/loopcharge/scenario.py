"""Problem-instance data model, JSON ingestion/persistence, and validation."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import BundleError, ScenarioError
from .kinematics import (
    UNIT_MOVES,
    MotionPrimitive,
    Primitive,
    Recharge,
    RobotState,
    Wait,
    WorkingLoop,
)
from .workspace import Cell, Workspace, parse_grid_map

FORMAT_VERSION = 1

#: Named primitive sets usable without declaring them in the scenario file.
BUILTIN_PRIMITIVE_SETS = {"unit4": UNIT_MOVES}


@dataclass(frozen=True)
class WorkerSpec:
    id: str
    loop: WorkingLoop
    emax: int
    primitive_set: tuple[MotionPrimitive, ...] = UNIT_MOVES

    def __post_init__(self):
        names = {p.name: p for p in self.primitive_set}
        for move in self.loop.moves:
            if names.get(move.name) != move:
                raise ScenarioError(
                    f"worker {self.id}: loop move {move.name!r} not in its primitive set"
                )
        if self.loop.total_cost > self.emax:
            raise ScenarioError(
                f"worker {self.id}: loop cost {self.loop.total_cost} exceeds emax {self.emax}"
            )


@dataclass(frozen=True)
class RechargerSpec:
    id: str
    primitive_set: tuple[MotionPrimitive, ...] = UNIT_MOVES

    def __post_init__(self):
        if not self.primitive_set:
            raise ScenarioError(f"recharger {self.id}: primitive set is empty")


@dataclass(frozen=True)
class Scenario:
    """One planning problem: workspace, robots, horizon and objective settings.

    ``potential_starts`` keeps declaration order; the greedy baseline seats
    rechargers at its leading cells.
    """

    workspace: Workspace
    workers: tuple[WorkerSpec, ...]
    rechargers: tuple[RechargerSpec, ...]
    potential_starts: tuple[Cell, ...]
    horizon: int
    delta_max: int
    weights: tuple[int, int] = (1000, 1)
    objective_mode: str = "lexicographic"

    def __post_init__(self):
        if not self.workers:
            raise ScenarioError("at least one worker is required")
        if not self.rechargers:
            raise ScenarioError("at least one recharger is required")
        ids = [r.id for r in self.workers] + [r.id for r in self.rechargers]
        if len(set(ids)) != len(ids):
            raise ScenarioError("robot ids must be unique")
        if self.horizon < 2:
            raise ScenarioError(f"horizon must be at least 2, got {self.horizon}")
        if self.delta_max <= 0:
            raise ScenarioError(f"delta_max must be positive, got {self.delta_max}")
        if self.objective_mode not in ("lexicographic", "weighted"):
            raise ScenarioError(f"unknown objective_mode {self.objective_mode!r}")
        if any(w < 0 for w in self.weights):
            raise ScenarioError(f"objective weights must be non-negative, got {self.weights}")
        if len(set(self.potential_starts)) != len(self.potential_starts):
            raise ScenarioError("potential_starts contains duplicates")
        for p in self.potential_starts:
            if not self.workspace.is_free(p):
                raise ScenarioError(f"potential start {p} is not a free cell")
        if len(self.potential_starts) < len(self.rechargers):
            raise ScenarioError(
                f"need at least {len(self.rechargers)} potential starts, "
                f"got {len(self.potential_starts)}"
            )
        seen_cells: dict[Cell, str] = {}
        for w in self.workers:
            for c in w.loop.cells:
                if not self.workspace.is_free(c):
                    raise ScenarioError(f"worker {w.id}: loop cell occupied at {c}")
                if c in seen_cells:
                    raise ScenarioError(
                        f"loops intersect: {w.id} and {seen_cells[c]} share cell {c}"
                    )
                seen_cells[c] = w.id
            for k, (cell, move) in enumerate(zip(w.loop.cells, w.loop.moves)):
                for ox, oy in move.intermediate_offsets:
                    c = Cell(cell.x + ox, cell.y + oy)
                    if not self.workspace.is_free(c):
                        raise ScenarioError(
                            f"worker {w.id}: move {k + 1} sweeps blocked cell {c}"
                        )
        longest = max(w.loop.closed_length for w in self.workers)
        if self.horizon < longest:
            warnings.warn(
                f"horizon {self.horizon} is shorter than the longest closed loop ({longest}); "
                "workers cannot complete a single traversal",
                stacklevel=2,
            )

    def worker(self, worker_id: str) -> WorkerSpec:
        for w in self.workers:
            if w.id == worker_id:
                return w
        raise KeyError(worker_id)

    def digest(self) -> str:
        """SHA-256 of the canonicalized scenario JSON."""
        doc = scenario_to_dict(self)
        doc.pop("format_version", None)
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RechargeEvent:
    t: int
    worker: str
    recharger: str
    delta: int
    cell: Cell


@dataclass(frozen=True)
class PlanBundle:
    """Synthesized plans plus their induced trajectories over the extended hypercycle.

    Every plan holds ``extended_horizon - 1`` actions; trajectories hold one
    state per time point 1..extended_horizon.
    """

    scenario_digest: str
    horizon: int
    extended_horizon: int
    plans: dict[str, tuple[Primitive, ...]]
    trajectories: dict[str, tuple[RobotState, ...]]
    recharge_events: tuple[RechargeEvent, ...]
    recharger_initial: dict[str, Cell]


# --- primitive (de)serialization -------------------------------------------------


def _primitive_to_dict(p: MotionPrimitive) -> dict:
    doc = {"name": p.name, "dx": p.dx, "dy": p.dy, "cost": p.cost}
    default = ((0, 0),) if (p.dx, p.dy) == (0, 0) else ((0, 0), (p.dx, p.dy))
    if p.intermediate_offsets != default:
        doc["intermediate"] = [list(o) for o in p.intermediate_offsets]
    return doc


def _primitive_from_dict(doc: dict) -> MotionPrimitive:
    try:
        offsets = tuple((int(a), int(b)) for a, b in doc.get("intermediate", []))
        return MotionPrimitive(
            str(doc["name"]), int(doc["dx"]), int(doc["dy"]), int(doc.get("cost", 1)), offsets
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad primitive declaration {doc!r}: {exc}") from None


def _action_to_dict(a: Primitive) -> dict:
    if isinstance(a, MotionPrimitive):
        return {"move": a.name}
    if isinstance(a, Wait):
        return {"wait": True}
    if isinstance(a, Recharge):
        return {"recharge": a.delta}
    raise BundleError(f"unknown action {a!r}")


def _action_from_dict(doc: dict, by_name: dict[str, MotionPrimitive]) -> Primitive:
    if "move" in doc:
        name = doc["move"]
        if name not in by_name:
            raise BundleError(f"plan references undeclared primitive {name!r}")
        return by_name[name]
    if "wait" in doc:
        return Wait()
    if "recharge" in doc:
        return Recharge(int(doc["recharge"]))
    raise BundleError(f"unknown action document {doc!r}")


# --- scenario files ---------------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict:
    """Scenario as a canonical JSON document (map inlined, deterministic ordering)."""
    sets: dict[str, tuple[MotionPrimitive, ...]] = {}

    def set_name(prims: tuple[MotionPrimitive, ...]) -> str:
        for name, known in BUILTIN_PRIMITIVE_SETS.items():
            if prims == known:
                return name
        for name, known in sets.items():
            if prims == known:
                return name
        name = f"set{len(sets)}"
        sets[name] = prims
        return name

    workers = []
    for w in s.workers:
        loop = w.loop
        points = [list(c) for c in loop.cells] + [list(loop.cells[0])]
        workers.append(
            {
                "id": w.id,
                "emax": w.emax,
                "primitive_set": set_name(w.primitive_set),
                "loop": {"points": points, "moves": [m.name for m in loop.moves]},
            }
        )
    rechargers = [
        {"id": r.id, "primitive_set": set_name(r.primitive_set)} for r in s.rechargers
    ]
    doc = {
        "format_version": FORMAT_VERSION,
        "workspace": {
            "width": s.workspace.width,
            "height": s.workspace.height,
            "obstacles": sorted([list(o) for o in s.workspace.obstacles]),
        },
        "workers": workers,
        "rechargers": rechargers,
        "potential_starts": [list(p) for p in s.potential_starts],
        "horizon": s.horizon,
        "delta_max": s.delta_max,
        "weights": list(s.weights),
        "objective_mode": s.objective_mode,
    }
    if sets:
        doc["primitives"] = {
            name: [_primitive_to_dict(p) for p in prims] for name, prims in sets.items()
        }
    return doc


def scenario_from_dict(doc: dict, base_dir: Optional[Path] = None) -> Scenario:
    try:
        ws_doc = doc["workspace"]
    except (KeyError, TypeError):
        raise ScenarioError("missing 'workspace' section") from None
    if "map" in ws_doc:
        workspace = parse_grid_map(ws_doc["map"])
    elif "map_path" in ws_doc:
        path = Path(ws_doc["map_path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        workspace = parse_grid_map(path.read_text())
    else:
        try:
            obstacles = frozenset(Cell(int(x), int(y)) for x, y in ws_doc.get("obstacles", []))
            workspace = Workspace(int(ws_doc["width"]), int(ws_doc["height"]), obstacles)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad workspace section: {exc}") from None

    prim_sets = dict(BUILTIN_PRIMITIVE_SETS)
    for name, prims in doc.get("primitives", {}).items():
        prim_sets[name] = tuple(_primitive_from_dict(p) for p in prims)

    def resolve_set(name: str, owner: str) -> tuple[MotionPrimitive, ...]:
        if name not in prim_sets:
            raise ScenarioError(f"{owner}: unknown primitive_set {name!r}")
        return prim_sets[name]

    workers = []
    for wdoc in doc.get("workers", []):
        try:
            wid = str(wdoc["id"])
            prims = resolve_set(wdoc.get("primitive_set", "unit4"), f"worker {wdoc['id']}")
            by_name = {p.name: p for p in prims}
            points = [Cell(int(x), int(y)) for x, y in wdoc["loop"]["points"]]
            moves = []
            for mname in wdoc["loop"]["moves"]:
                if mname not in by_name:
                    raise ScenarioError(f"worker {wid}: unknown loop move {mname!r}")
                moves.append(by_name[mname])
            loop = WorkingLoop.from_closed_points(points, moves)
            workers.append(WorkerSpec(wid, loop, int(wdoc["emax"]), prims))
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad worker entry {wdoc!r}: {exc}") from None
    rechargers = []
    for rdoc in doc.get("rechargers", []):
        try:
            rechargers.append(
                RechargerSpec(
                    str(rdoc["id"]),
                    resolve_set(rdoc.get("primitive_set", "unit4"), f"recharger {rdoc['id']}"),
                )
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad recharger entry {rdoc!r}: {exc}") from None

    starts_doc = doc.get("potential_starts")
    if starts_doc is None:
        potential_starts = tuple(workspace.free_cells())
    else:
        potential_starts = tuple(Cell(int(x), int(y)) for x, y in starts_doc)

    try:
        horizon = int(doc["horizon"])
        delta_max = int(doc["delta_max"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad horizon/delta_max: {exc}") from None
    weights = tuple(int(v) for v in doc.get("weights", (1000, 1)))
    if len(weights) != 2:
        raise ScenarioError(f"weights must have two entries, got {weights}")
    return Scenario(
        workspace=workspace,
        workers=tuple(workers),
        rechargers=tuple(rechargers),
        potential_starts=potential_starts,
        horizon=horizon,
        delta_max=delta_max,
        weights=weights,
        objective_mode=str(doc.get("objective_mode", "lexicographic")),
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from None
    return scenario_from_dict(doc, base_dir=path.parent)


def save_scenario(s: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n")


# --- plan bundle files ------------------------------------------------------------


def bundle_to_dict(b: PlanBundle) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scenario_digest": b.scenario_digest,
        "horizon": b.horizon,
        "extended_horizon": b.extended_horizon,
        "plans": {rid: [_action_to_dict(a) for a in plan] for rid, plan in b.plans.items()},
        "trajectories": {
            rid: [{"p": list(st.p), "v": st.v, "e": st.e} for st in traj]
            for rid, traj in b.trajectories.items()
        },
        "recharge_events": [
            {"t": ev.t, "worker": ev.worker, "recharger": ev.recharger,
             "delta": ev.delta, "cell": list(ev.cell)}
            for ev in b.recharge_events
        ],
        "recharger_initial": {rid: list(c) for rid, c in b.recharger_initial.items()},
    }


def bundle_from_dict(doc: dict, scenario: Scenario) -> PlanBundle:
    """Rebuild a bundle, resolving move names against the scenario's primitive sets.

    Structural invariants (plan lengths, trajectory arithmetic) are enforced
    here; semantic validity is the executor's job.
    """
    try:
        horizon = int(doc["horizon"])
        t_prime = int(doc["extended_horizon"])
        digest = str(doc["scenario_digest"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"bad bundle header: {exc}") from None
    sets = {w.id: {p.name: p for p in w.primitive_set} for w in scenario.workers}
    sets.update({r.id: {p.name: p for p in r.primitive_set} for r in scenario.rechargers})
    plans = {}
    for rid, actions in doc.get("plans", {}).items():
        if rid not in sets:
            raise BundleError(f"plan for unknown robot {rid!r}")
        plans[rid] = tuple(_action_from_dict(a, sets[rid]) for a in actions)
        if len(plans[rid]) != t_prime - 1:
            raise BundleError(
                f"robot {rid}: plan has {len(plans[rid])} actions, expected {t_prime - 1}"
            )
    trajectories = {}
    for rid, states in doc.get("trajectories", {}).items():
        trajectories[rid] = tuple(
            RobotState(Cell(int(st["p"][0]), int(st["p"][1])), int(st.get("v", 0)), int(st["e"]))
            for st in states
        )
        if len(trajectories[rid]) != t_prime:
            raise BundleError(
                f"robot {rid}: trajectory has {len(trajectories[rid])} states, expected {t_prime}"
            )
    events = tuple(
        RechargeEvent(
            int(ev["t"]), str(ev["worker"]), str(ev["recharger"]), int(ev["delta"]),
            Cell(int(ev["cell"][0]), int(ev["cell"][1])),
        )
        for ev in doc.get("recharge_events", [])
    )
    initial = {
        rid: Cell(int(c[0]), int(c[1])) for rid, c in doc.get("recharger_initial", {}).items()
    }
    bundle = PlanBundle(digest, horizon, t_prime, plans, trajectories, events, initial)
    _check_trajectory_arithmetic(bundle, scenario)
    return bundle


def _check_trajectory_arithmetic(b: PlanBundle, s: Scenario) -> None:
    """Positions shift by displacements and energy telescopes along each plan."""
    for rid, plan in b.plans.items():
        traj = b.trajectories.get(rid)
        if traj is None:
            raise BundleError(f"robot {rid}: plan without trajectory")
        for t, act in enumerate(plan):
            cur, nxt = traj[t], traj[t + 1]
            if isinstance(act, MotionPrimitive):
                expect = Cell(cur.p.x + act.dx, cur.p.y + act.dy)
                de = -act.cost
            else:
                expect = cur.p
                de = act.delta if isinstance(act, Recharge) else 0
            if nxt.p != expect or nxt.e != cur.e + de:
                raise BundleError(f"robot {rid}: trajectory inconsistent at step {t + 1}")


def make_bundle(
    scenario: Scenario,
    horizon: int,
    extended_horizon: int,
    plans: dict[str, tuple[Primitive, ...]],
    recharge_events: tuple[RechargeEvent, ...],
    recharger_initial: dict[str, Cell],
) -> PlanBundle:
    """Assemble a bundle, deriving trajectories from the plans arithmetically.

    Post-condition arithmetic only (positions shift, energy telescopes);
    semantic validity is the executor's business. Rechargers carry no battery,
    so their states keep e = 0.
    """
    emax = {w.id: w.emax for w in scenario.workers}
    homes = {w.id: w.loop.home for w in scenario.workers}
    trajectories = {}
    for rid, plan in plans.items():
        if rid in emax:
            state = RobotState(homes[rid], e=emax[rid])
        else:
            state = RobotState(recharger_initial[rid], e=0)
        states = [state]
        for act in plan:
            if isinstance(act, MotionPrimitive):
                de = -act.cost if rid in emax else 0
                state = RobotState(Cell(state.p.x + act.dx, state.p.y + act.dy),
                                   state.v, state.e + de)
            elif isinstance(act, Recharge):
                state = RobotState(state.p, state.v, state.e + act.delta)
            else:
                state = state
            states.append(state)
        trajectories[rid] = tuple(states)
    return PlanBundle(
        scenario_digest=scenario.digest(),
        horizon=horizon,
        extended_horizon=extended_horizon,
        plans=dict(plans),
        trajectories=trajectories,
        recharge_events=tuple(recharge_events),
        recharger_initial=dict(recharger_initial),
    )


def load_bundle(path: Union[str, Path], scenario: Scenario) -> PlanBundle:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: not valid JSON: {exc}") from None
    return bundle_from_dict(doc, scenario)


def save_bundle(b: PlanBundle, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(bundle_to_dict(b), indent=2, sort_keys=True) + "\n")
