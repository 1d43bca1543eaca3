"""Bundled scenario fixtures and seeded random generators.

The 19x19 families mirror the usual experiment setups: a warehouse with
shelf racks circled by working loops, an artificial floor with walled rooms,
and random grids at 20%/30% obstacle density. Worker energy defaults follow
the half-deplete-in-10, half-in-12 convention with unit move costs, and the
default per-step recharge cap is 10.
"""

from __future__ import annotations

import random
import warnings
from typing import Optional

from .errors import ScenarioError
from .kinematics import MotionPrimitive, WorkingLoop, UNIT_MOVES
from .scenario import RechargerSpec, Scenario, WorkerSpec
from .workspace import Cell, Workspace, shortest_travel_time

E, W, S, N = UNIT_MOVES


def rect_loop(x0: int, y0: int, w_cells: int, h_cells: int) -> WorkingLoop:
    """Clockwise rectangle-perimeter loop; 2(w+h)-4 distinct cells."""
    cells: list[Cell] = []
    moves: list[MotionPrimitive] = []
    for x in range(x0, x0 + w_cells - 1):
        cells.append(Cell(x, y0))
        moves.append(E)
    for y in range(y0, y0 + h_cells - 1):
        cells.append(Cell(x0 + w_cells - 1, y))
        moves.append(S)
    for x in range(x0 + w_cells - 1, x0, -1):
        cells.append(Cell(x, y0 + h_cells - 1))
        moves.append(W)
    for y in range(y0 + h_cells - 1, y0, -1):
        cells.append(Cell(x0, y))
        moves.append(N)
    return WorkingLoop(tuple(cells), tuple(moves))


def tiny(horizon: int = 12, delta_max: int = 4) -> Scenario:
    """5x5 single-worker fixture with the recharger seat beside the loop."""
    return Scenario(
        workspace=Workspace(5, 5),
        workers=(WorkerSpec("w1", rect_loop(1, 1, 3, 3), 8),),
        rechargers=(RechargerSpec("c1"),),
        potential_starts=(Cell(0, 0), Cell(4, 4)),
        horizon=horizon,
        delta_max=delta_max,
    )


def _rack(x: int, y: int, length: int) -> set[Cell]:
    return {Cell(x + i, y) for i in range(length)}


def warehouse(n_workers: int = 4, n_rechargers: int = 2, horizon: int = 35,
              delta_max: int = 10, potential: Optional[int] = 16) -> Scenario:
    """19x19 warehouse: shelf racks circled by working loops, aisle columns
    between rack pairs wide enough for a recharger to serve both sides.

    ``potential`` trims the 16-cell start list (ordered from the aisle seats
    outward); None keeps every free cell.
    """
    obstacles: set[Cell] = set()
    # racks inside the four working loops (two pairs separated by one aisle)
    obstacles |= _rack(3, 4, 2)
    obstacles |= _rack(8, 4, 2)
    obstacles |= _rack(3, 14, 1)
    obstacles |= _rack(7, 14, 1)
    # far-east shelving, scenery only
    obstacles |= _rack(13, 4, 3)
    obstacles |= _rack(13, 9, 3)
    obstacles |= _rack(13, 14, 3)
    ws = Workspace(19, 19, frozenset(obstacles))

    loops = [
        rect_loop(2, 3, 4, 3),   # 10 cells around the north-west rack
        rect_loop(7, 3, 4, 3),   # 10 cells around the north-east rack
        rect_loop(2, 13, 3, 3),  # 8 cells around the south-west rack
        rect_loop(6, 13, 3, 3),  # 8 cells around the south-east rack
    ]
    emaxes = [12, 12, 10, 10]
    workers = tuple(
        WorkerSpec(f"w{i + 1}", loops[i], emaxes[i]) for i in range(n_workers)
    )
    rechargers = tuple(RechargerSpec(f"c{j + 1}") for j in range(n_rechargers))

    starts_16 = [
        Cell(6, 4), Cell(5, 14),    # aisle seats between the loop pairs
        Cell(1, 4), Cell(11, 4), Cell(1, 14), Cell(9, 14),
        Cell(6, 1), Cell(6, 7), Cell(4, 11), Cell(9, 9),
        Cell(12, 2), Cell(17, 4), Cell(12, 12), Cell(17, 14),
        Cell(1, 9), Cell(9, 17),
    ]
    loop_cells = {c for lp in loops[:n_workers] for c in lp.cells}
    starts_16 = [c for c in starts_16 if c not in loop_cells and ws.is_free(c)]
    if potential is None:
        potential_starts = tuple(ws.free_cells())
    else:
        potential_starts = tuple(starts_16[:potential])
    return Scenario(
        workspace=ws,
        workers=workers,
        rechargers=rechargers,
        potential_starts=potential_starts,
        horizon=horizon,
        delta_max=delta_max,
    )


def artificial_floor(n_workers: int = 4, n_rechargers: int = 2,
                     horizon: int = 20, delta_max: int = 10) -> Scenario:
    """19x19 floor: four walled rooms with door gaps, loops inside the rooms."""
    obstacles: set[Cell] = set()
    for k in range(19):
        if k not in (4, 14):  # doors through the cross walls
            obstacles.add(Cell(9, k))
            obstacles.add(Cell(k, 9))
    ws = Workspace(19, 19, frozenset(obstacles))
    loops = [
        rect_loop(2, 2, 3, 3),
        rect_loop(13, 2, 4, 3),
        rect_loop(2, 13, 4, 3),
        rect_loop(14, 14, 3, 3),
    ]
    emaxes = [10, 12, 12, 10]
    workers = tuple(
        WorkerSpec(f"w{i + 1}", loops[i], emaxes[i]) for i in range(n_workers)
    )
    rechargers = tuple(RechargerSpec(f"c{j + 1}") for j in range(n_rechargers))
    starts = tuple(
        c for c in (Cell(7, 4), Cell(11, 4), Cell(7, 14), Cell(11, 14),
                    Cell(4, 7), Cell(4, 11), Cell(14, 7), Cell(14, 11))
    )
    return Scenario(
        workspace=ws,
        workers=workers,
        rechargers=rechargers,
        potential_starts=starts,
        horizon=horizon,
        delta_max=delta_max,
    )


def _loops_serviceable(ws: Workspace, loops: list[WorkingLoop],
                       starts: list[Cell]) -> bool:
    """Every loop cell must have an off-loop seat reachable from every start,
    so a worker halting anywhere on its ring can always be served."""
    loop_cells = {c for lp in loops for c in lp.cells}
    blocked = ws.with_obstacles(loop_cells)
    for lp in loops:
        for cell in lp.cells:
            seats = {
                c for c in ws.neighborhood(cell)
                if c != cell and c not in loop_cells
            }
            if not seats:
                return False
            for s in starts:
                if shortest_travel_time(blocked, s, seats, UNIT_MOVES) is None:
                    return False
    return True


def random_grid(density: float, seed: int, n_workers: int = 4,
                n_rechargers: int = 2, horizon: int = 20,
                delta_max: int = 10, size: int = 19) -> Scenario:
    """Random workspace at the given obstacle density with planted loops.

    Deterministic per seed; re-rolls obstacle layouts (bumping a sub-seed)
    until the instance validates and every loop is serviceable.
    """
    side_choices = [2, 3] if size <= 8 else [3, 3, 4]
    for attempt in range(200):
        rng = random.Random(seed * 10_007 + attempt)
        loops: list[WorkingLoop] = []
        used: set[Cell] = set()
        guard = 0
        while len(loops) < n_workers and guard < 500:
            guard += 1
            w_cells = rng.choice(side_choices)
            h_cells = rng.choice(side_choices)
            # x0, y0 >= 1 keeps the home's seat ring inside the grid
            x0 = rng.randrange(1, size - w_cells + 1)
            y0 = rng.randrange(1, size - h_cells + 1)
            lp = rect_loop(x0, y0, w_cells, h_cells)
            # keep a free ring around the home cell so a service seat exists;
            # loops themselves may sit side by side
            footprint = set(lp.cells) | {
                Cell(lp.home.x + dx, lp.home.y + dy)
                for dx in (-1, 0, 1) for dy in (-1, 0, 1)
            }
            if footprint & used:
                continue
            loops.append(lp)
            used |= footprint
        if len(loops) < n_workers:
            continue
        loop_cells = {c for lp in loops for c in lp.cells}
        n_obs = int(size * size * density)
        candidates = [
            Cell(x, y) for x in range(size) for y in range(size)
            if Cell(x, y) not in used
        ]
        rng.shuffle(candidates)
        obstacles = frozenset(candidates[:n_obs])
        ws = Workspace(size, size, obstacles)
        free_far = [
            c for c in candidates[n_obs:]
            if c not in loop_cells
        ]
        rng.shuffle(free_far)
        starts = free_far[: max(4, n_rechargers)]
        if len(starts) < n_rechargers:
            continue
        if not _loops_serviceable(ws, loops, starts):
            continue
        if size <= 8:
            # deplete roughly once per loop so recharging is actually exercised
            emaxes = [loops[i].total_cost + rng.choice([0, 1, 2])
                      for i in range(n_workers)]
        else:
            emaxes = [max(10 if i % 2 else 12, loops[i].total_cost)
                      for i in range(n_workers)]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return Scenario(
                    workspace=ws,
                    workers=tuple(
                        WorkerSpec(f"w{i + 1}", loops[i], emaxes[i])
                        for i in range(n_workers)
                    ),
                    rechargers=tuple(
                        RechargerSpec(f"c{j + 1}") for j in range(n_rechargers)
                    ),
                    potential_starts=tuple(starts),
                    horizon=horizon,
                    delta_max=delta_max,
                )
        except ScenarioError:
            continue
    raise ScenarioError(
        f"could not generate a valid random grid (density {density}, seed {seed})"
    )


def random_small(seed: int) -> Scenario:
    """Small randomized instance for soundness sweeps: <= 7x7 grid, 2-3 short
    loops, 1-2 rechargers, horizon 12-16."""
    rng = random.Random(seed)
    n_workers = rng.choice([2, 2, 3])
    n_rechargers = rng.choice([1, 2])
    size = 7 if n_workers == 3 else rng.choice([6, 7])
    horizon = rng.choice([12, 14, 16])
    delta_max = rng.choice([2, 3, 4])
    scenario = random_grid(
        density=rng.choice([0.0, 0.05]),
        seed=seed * 31 + 7,
        n_workers=n_workers,
        n_rechargers=n_rechargers,
        horizon=horizon,
        delta_max=delta_max,
        size=size,
    )
    return scenario


BUNDLED = {
    "tiny": tiny,
    "warehouse": warehouse,
    "artificial_floor": artificial_floor,
}


def bundled(name: str, **kwargs) -> Scenario:
    if name in BUNDLED:
        return BUNDLED[name](**kwargs)
    if name.startswith("random20-"):
        return random_grid(0.2, int(name.split("-", 1)[1]), **kwargs)
    if name.startswith("random30-"):
        return random_grid(0.3, int(name.split("-", 1)[1]), **kwargs)
    raise ScenarioError(
        f"unknown fixture {name!r}; available: {sorted(BUNDLED)}, "
        "random20-<seed>, random30-<seed>"
    )
