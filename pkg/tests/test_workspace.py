import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopcharge.errors import DomainError, ScenarioError
from loopcharge.kinematics import UNIT_MOVES, MotionPrimitive
from loopcharge.workspace import (
    Cell,
    Workspace,
    format_grid_map,
    parse_grid_map,
    shortest_path,
    shortest_travel_time,
)

from oracles import travel_time_oracle


def test_neighborhood_interior_includes_center():
    w = Workspace(5, 5)
    assert w.neighborhood(Cell(2, 2)) == {
        Cell(x, y) for x in (1, 2, 3) for y in (1, 2, 3)
    }


def test_neighborhood_corner_clips():
    w = Workspace(5, 5)
    assert w.neighborhood(Cell(0, 0)) == {Cell(0, 0), Cell(0, 1), Cell(1, 0), Cell(1, 1)}


def test_neighborhood_removes_obstacles():
    w = Workspace(3, 3, frozenset({Cell(1, 2)}))
    expected = {Cell(x, y) for x in (0, 1, 2) for y in (0, 1, 2)} - {Cell(1, 2)}
    assert w.neighborhood(Cell(1, 1)) == expected


def test_neighborhood_out_of_bounds():
    with pytest.raises(DomainError):
        Workspace(3, 3).neighborhood(Cell(3, 0))


def test_travel_time_adjacent_and_identity():
    w = Workspace(5, 5)
    assert shortest_travel_time(w, Cell(0, 2), {Cell(1, 2)}, UNIT_MOVES) == 1
    assert shortest_travel_time(w, Cell(0, 0), {Cell(0, 0)}, UNIT_MOVES) == 0


def test_travel_time_wall_with_gap():
    # Wall at column x=2 except (2, 4); value 12 frozen from the graph oracle.
    wall = frozenset(Cell(2, y) for y in range(4))
    w = Workspace(5, 5, wall)
    assert travel_time_oracle(w, Cell(0, 0), {Cell(4, 0)}, UNIT_MOVES) == 12
    assert shortest_travel_time(w, Cell(0, 0), {Cell(4, 0)}, UNIT_MOVES) == 12


def test_travel_time_unreachable():
    w = Workspace(3, 1, frozenset({Cell(1, 0)}))
    assert shortest_travel_time(w, Cell(0, 0), {Cell(2, 0)}, UNIT_MOVES) is None


def test_shortest_path_replays_to_target():
    wall = frozenset(Cell(2, y) for y in range(4))
    w = Workspace(5, 5, wall)
    path = shortest_path(w, Cell(0, 0), {Cell(4, 0)}, UNIT_MOVES)
    assert len(path) == 12
    x, y = 0, 0
    for prim in path:
        x, y = x + prim.dx, y + prim.dy
        assert w.is_free(Cell(x, y))
    assert (x, y) == (4, 0)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_travel_time_matches_oracle_and_symmetry(data):
    width = data.draw(st.integers(2, 6))
    height = data.draw(st.integers(2, 6))
    blocked = data.draw(
        st.sets(
            st.tuples(st.integers(0, width - 1), st.integers(0, height - 1)),
            max_size=width * height // 3,
        )
    )
    w = Workspace(width, height, frozenset(Cell(x, y) for x, y in blocked))
    free = w.free_cells()
    a = data.draw(st.sampled_from(free))
    b = data.draw(st.sampled_from(free))
    got = shortest_travel_time(w, a, {b}, UNIT_MOVES)
    assert got == travel_time_oracle(w, a, {b}, UNIT_MOVES)
    # unit moves are symmetric
    assert got == shortest_travel_time(w, b, {a}, UNIT_MOVES)
    assert shortest_travel_time(w, a, {a}, UNIT_MOVES) == 0


def test_travel_time_respects_long_primitive_sweep():
    dash = MotionPrimitive("EE", 2, 0, 1, ((0, 0), (1, 0), (2, 0)))
    w = Workspace(5, 1, frozenset({Cell(1, 0)}))
    # the dash would sweep the blocked middle cell
    assert shortest_travel_time(w, Cell(0, 0), {Cell(2, 0)}, (dash,)) is None
    assert shortest_travel_time(Workspace(5, 1), Cell(0, 0), {Cell(4, 0)}, (dash,)) == 2


def test_grid_map_round_trip():
    text = "4 3\n....\n.#.#\n....\n"
    w = parse_grid_map(text)
    assert w.width == 4 and w.height == 3
    assert w.obstacles == frozenset({Cell(1, 1), Cell(3, 1)})
    assert format_grid_map(w) == text


@pytest.mark.parametrize(
    "text",
    ["", "4\n....\n", "2 2\n..\n.x\n", "2 2\n..\n", "3 2\n...\n..\n"],
)
def test_grid_map_rejects_malformed(text):
    with pytest.raises(ScenarioError):
        parse_grid_map(text)


def test_workspace_rejects_all_obstacles():
    with pytest.raises(DomainError):
        Workspace(1, 1, frozenset({Cell(0, 0)}))
