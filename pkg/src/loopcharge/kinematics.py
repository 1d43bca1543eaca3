"""Robot state and primitive semantics: motion, wait, recharge, loop traversal.

The time step is normalized to 1; every primitive takes exactly one step.
Energy is a scaled integer (pick the scale when building a scenario if
fractional amounts are needed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import (
    DomainError,
    EnergyError,
    LoopOrderError,
    OverchargeError,
    PreconditionError,
)
from .workspace import Cell

V0 = 0  # stationary velocity configuration; all default primitives require and produce it


@dataclass(frozen=True)
class RobotState:
    p: Cell
    v: int = V0
    e: int = 0


@dataclass(frozen=True)
class MotionPrimitive:
    """Unit-time controllable action: displacement, energy cost, traversed cells.

    ``intermediate_offsets`` lists the cell offsets swept while executing the
    primitive, starting at (0, 0) and ending at the displacement.
    """

    name: str
    dx: int
    dy: int
    cost: int = 1
    intermediate_offsets: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.intermediate_offsets:
            offsets = ((0, 0),) if (self.dx, self.dy) == (0, 0) else ((0, 0), (self.dx, self.dy))
            object.__setattr__(self, "intermediate_offsets", offsets)
        if self.cost < 0:
            raise DomainError(f"primitive {self.name}: cost must be >= 0")
        if self.intermediate_offsets[0] != (0, 0):
            raise DomainError(f"primitive {self.name}: intermediate offsets must start at (0, 0)")
        if self.intermediate_offsets[-1] != (self.dx, self.dy):
            raise DomainError(
                f"primitive {self.name}: intermediate offsets must end at the displacement"
            )

    @property
    def disp(self) -> tuple[int, int]:
        return (self.dx, self.dy)


@dataclass(frozen=True)
class Wait:
    """Unit-time stationary action with zero energy cost."""


@dataclass(frozen=True)
class Recharge:
    """Unit-time worker action gaining ``delta`` energy from an adjacent recharger."""

    delta: int


Primitive = Union[MotionPrimitive, Wait, Recharge]

WAIT = Wait()

#: Default motion set: 4-connected unit moves of cost 1 (waiting is a separate primitive).
UNIT_MOVES = (
    MotionPrimitive("E", 1, 0, 1),
    MotionPrimitive("W", -1, 0, 1),
    MotionPrimitive("S", 0, 1, 1),
    MotionPrimitive("N", 0, -1, 1),
)


def apply(state: RobotState, prim: Primitive, emax: int, delta_max: int) -> RobotState:
    """Apply one primitive, enforcing its pre/post semantics.

    Cursor alignment (for workers) and recharger adjacency are the caller's
    responsibility; everything local to the state is checked here.
    """
    if isinstance(prim, MotionPrimitive):
        if state.v != V0:
            raise PreconditionError("motion requires v0", f"v={state.v}")
        e = state.e - prim.cost
        if e < 0:
            raise EnergyError("energy underflow", f"e={state.e} cost={prim.cost}")
        return RobotState(Cell(state.p.x + prim.dx, state.p.y + prim.dy), V0, e)
    if isinstance(prim, Wait):
        if state.v != V0:
            raise PreconditionError("wait requires v0", f"v={state.v}")
        return state
    if isinstance(prim, Recharge):
        if state.v != V0:
            raise PreconditionError("recharge requires v0", f"v={state.v}")
        if state.e >= emax:
            raise PreconditionError("recharge requires e < emax", f"e={state.e} emax={emax}")
        if prim.delta <= 0 or prim.delta > delta_max:
            raise PreconditionError(
                "recharge amount must satisfy 0 < delta <= delta_max",
                f"delta={prim.delta} delta_max={delta_max}",
            )
        e = state.e + prim.delta
        if e > emax:
            raise OverchargeError("overcharge", f"e={state.e} delta={prim.delta} emax={emax}")
        return RobotState(state.p, V0, e)
    raise DomainError(f"unknown primitive {prim!r}")


def recharge_steps_needed(e: int, emax: int, delta_max: int) -> int:
    """Number of recharge steps to refill from ``e`` to ``emax`` at ``delta_max`` per step."""
    if delta_max <= 0:
        raise DomainError(f"delta_max must be positive, got {delta_max}")
    if e < 0 or e > emax:
        raise DomainError(f"energy {e} outside [0, {emax}]")
    return math.ceil((emax - e) / delta_max)


@dataclass(frozen=True)
class WorkingLoop:
    """Closed cyclic cell sequence with one aligned motion primitive per cell.

    ``cells`` holds the distinct ring cells once; the closing repeat of the
    start cell is implicit. ``moves[k]`` applied at ``cells[k]`` lands on
    ``cells[(k + 1) % n]``.
    """

    cells: tuple[Cell, ...]
    moves: tuple[MotionPrimitive, ...]

    def __post_init__(self):
        n = len(self.cells)
        if n < 1:
            raise DomainError("working loop needs at least one cell")
        if len(self.moves) != n:
            raise DomainError(f"loop has {n} cells but {len(self.moves)} moves")
        if len(set(self.cells)) != n:
            raise DomainError("working loop cells must be distinct")
        for k, (cell, move) in enumerate(zip(self.cells, self.moves)):
            nxt = self.cells[(k + 1) % n]
            if (cell.x + move.dx, cell.y + move.dy) != (nxt.x, nxt.y):
                raise DomainError(
                    f"loop move {k + 1} ({move.name}) from {cell} does not land on {nxt}"
                )

    @property
    def home(self) -> Cell:
        return self.cells[0]

    @property
    def closed_length(self) -> int:
        """Point count of one closed traversal (start counted twice): n + 1.

        One full traversal takes ``closed_length - 1`` motion steps; horizon
        bounds and the certificate condition use this count.
        """
        return len(self.cells) + 1

    @property
    def total_cost(self) -> int:
        return sum(m.cost for m in self.moves)

    @classmethod
    def from_closed_points(
        cls, points: list[Cell], moves: list[MotionPrimitive]
    ) -> "WorkingLoop":
        """Build from a closed point list (last point repeats the first)."""
        if len(points) < 2:
            raise DomainError("closed point list needs at least 2 entries")
        if points[-1] != points[0]:
            raise DomainError("closed point list must end where it starts")
        return cls(tuple(points[:-1]), tuple(moves))


@dataclass(frozen=True)
class LoopCursor:
    """1-based index into a loop's move list; wraps at the loop length."""

    index: int = 1


def advance_cursor(cursor: LoopCursor, prim: Primitive, loop: WorkingLoop) -> LoopCursor:
    """Advance on motion (wrapping at the end of the ring), freeze on wait/recharge."""
    if isinstance(prim, (Wait, Recharge)):
        return cursor
    n = len(loop.cells)
    if not 1 <= cursor.index <= n:
        raise DomainError(f"cursor {cursor.index} outside [1, {n}]")
    expected = loop.moves[cursor.index - 1]
    if prim != expected:
        raise LoopOrderError(
            "motion must follow the working loop order",
            f"got {getattr(prim, 'name', prim)!r}, expected {expected.name!r} at index {cursor.index}",
        )
    return LoopCursor(1 if cursor.index == n else cursor.index + 1)
