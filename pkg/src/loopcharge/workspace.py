"""Occupancy-grid workspace: obstacle bookkeeping, neighborhoods, travel-time queries.

The grid is indexed by (x=column, y=row) with the origin at the top-left,
matching the text map format (first line ``width height``, then ``height``
rows of glyphs, ``#`` obstacle and ``.`` free).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, NamedTuple, Optional

from .errors import DomainError, ScenarioError

if TYPE_CHECKING:
    from .kinematics import MotionPrimitive


class Cell(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Workspace:
    """Immutable 2-D occupancy grid; the free set is the grid minus obstacles."""

    width: int
    height: int
    obstacles: frozenset[Cell] = frozenset()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        for o in self.obstacles:
            if not self.in_bounds(o):
                raise DomainError(f"obstacle {o} outside {self.width}x{self.height} grid")
        if len(self.obstacles) >= self.width * self.height:
            raise DomainError("free set is empty: every cell is an obstacle")

    def in_bounds(self, p: Cell) -> bool:
        return 0 <= p.x < self.width and 0 <= p.y < self.height

    def is_free(self, p: Cell) -> bool:
        return self.in_bounds(p) and p not in self.obstacles

    def free_cells(self) -> list[Cell]:
        """All free cells in row-major order (deterministic)."""
        return [
            Cell(x, y)
            for y in range(self.height)
            for x in range(self.width)
            if Cell(x, y) not in self.obstacles
        ]

    def neighborhood(self, p: Cell) -> set[Cell]:
        """Free cells within Chebyshev distance 1 of ``p``, including ``p`` itself when free."""
        if not self.in_bounds(p):
            raise DomainError(f"cell {p} outside {self.width}x{self.height} grid")
        return {
            Cell(p.x + dx, p.y + dy)
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            if self.is_free(Cell(p.x + dx, p.y + dy))
        }

    def with_obstacles(self, extra: Iterable[Cell]) -> "Workspace":
        """A copy with additional cells treated as obstacles (used for restricted routing)."""
        return Workspace(self.width, self.height, self.obstacles | frozenset(extra))


def _swept_cells(w: Workspace, at: Cell, prim: "MotionPrimitive") -> Optional[list[Cell]]:
    """Cells traversed by ``prim`` applied at ``at``, or None if any is blocked."""
    cells = []
    for ox, oy in prim.intermediate_offsets:
        c = Cell(at.x + ox, at.y + oy)
        if not w.is_free(c):
            return None
        cells.append(c)
    return cells


def shortest_travel_time(
    w: Workspace,
    start: Cell,
    to_any: Iterable[Cell],
    primitives: Iterable["MotionPrimitive"],
) -> Optional[int]:
    """Minimum number of unit-time primitive applications from ``start`` to any target cell.

    Breadth-first search; every intermediate cell of an applied primitive must be
    free. Returns None when no target is reachable.
    """
    targets = set(to_any)
    if not targets:
        raise DomainError("to_any must be non-empty")
    if not w.is_free(start):
        raise DomainError(f"start cell {start} is not free")
    prims = list(primitives)
    if start in targets:
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        cur, dist = frontier.popleft()
        for prim in prims:
            swept = _swept_cells(w, cur, prim)
            if swept is None:
                continue
            nxt = swept[-1]
            if nxt in targets:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, dist + 1))
    return None


def shortest_path(
    w: Workspace,
    start: Cell,
    to_any: Iterable[Cell],
    primitives: Iterable["MotionPrimitive"],
) -> Optional[list["MotionPrimitive"]]:
    """Primitive sequence realizing shortest_travel_time, or None if unreachable.

    Deterministic: ties are broken by breadth-first order with primitives tried
    in declaration order.
    """
    targets = set(to_any)
    if not targets:
        raise DomainError("to_any must be non-empty")
    if not w.is_free(start):
        raise DomainError(f"start cell {start} is not free")
    prims = list(primitives)
    if start in targets:
        return []
    parent: dict[Cell, tuple[Cell, "MotionPrimitive"]] = {}
    seen = {start}
    frontier = deque([start])
    goal = None
    while frontier and goal is None:
        cur = frontier.popleft()
        for prim in prims:
            swept = _swept_cells(w, cur, prim)
            if swept is None:
                continue
            nxt = swept[-1]
            if nxt in seen:
                continue
            seen.add(nxt)
            parent[nxt] = (cur, prim)
            if nxt in targets:
                goal = nxt
                break
            frontier.append(nxt)
    if goal is None:
        return None
    path = []
    cur = goal
    while cur != start:
        cur, prim = parent[cur]
        path.append(prim)
    path.reverse()
    return path


def parse_grid_map(text: str) -> Workspace:
    """Parse the text map format; any glyph other than ``#`` and ``.`` is an error."""
    lines = text.splitlines()
    if not lines:
        raise ScenarioError("map: empty text")
    header = lines[0].split()
    if len(header) != 2:
        raise ScenarioError(f"map: first line must be 'width height', got {lines[0]!r}")
    try:
        width, height = int(header[0]), int(header[1])
    except ValueError:
        raise ScenarioError(f"map: non-integer dimensions in {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != height:
        raise ScenarioError(f"map: expected {height} rows, got {len(rows)}")
    obstacles = set()
    for y, row in enumerate(rows):
        if len(row) != width:
            raise ScenarioError(f"map: row {y} has {len(row)} glyphs, expected {width}")
        for x, glyph in enumerate(row):
            if glyph == "#":
                obstacles.add(Cell(x, y))
            elif glyph != ".":
                raise ScenarioError(f"map: invalid glyph {glyph!r} at ({x}, {y})")
    return Workspace(width, height, frozenset(obstacles))


def format_grid_map(w: Workspace) -> str:
    rows = [f"{w.width} {w.height}"]
    for y in range(w.height):
        rows.append("".join("#" if Cell(x, y) in w.obstacles else "." for x in range(w.width)))
    return "\n".join(rows) + "\n"
