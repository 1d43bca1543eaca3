import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopcharge.errors import (
    DomainError,
    EnergyError,
    LoopOrderError,
    OverchargeError,
    PreconditionError,
)
from loopcharge.kinematics import (
    UNIT_MOVES,
    WAIT,
    LoopCursor,
    MotionPrimitive,
    Recharge,
    RobotState,
    Wait,
    WorkingLoop,
    advance_cursor,
    apply,
    recharge_steps_needed,
)
from loopcharge.workspace import Cell

from oracles import refill_steps_oracle

E, W, S, N = UNIT_MOVES


def square_loop() -> WorkingLoop:
    """Perimeter of the 3x3 block anchored at (1, 1): 8 distinct cells."""
    cells = [
        Cell(1, 1), Cell(2, 1), Cell(3, 1), Cell(3, 2),
        Cell(3, 3), Cell(2, 3), Cell(1, 3), Cell(1, 2),
    ]
    moves = [E, E, S, S, W, W, N, N]
    return WorkingLoop(tuple(cells), tuple(moves))


def test_apply_motion():
    got = apply(RobotState(Cell(1, 1), e=5), E, emax=10, delta_max=5)
    assert got == RobotState(Cell(2, 1), 0, 4)


def test_apply_wait_is_identity():
    st0 = RobotState(Cell(1, 1), e=5)
    assert apply(st0, WAIT, emax=10, delta_max=5) == st0


def test_apply_recharge_overcharge():
    with pytest.raises(OverchargeError):
        apply(RobotState(Cell(1, 1), e=95), Recharge(10), emax=100, delta_max=10)


def test_apply_recharge_at_full_charge_rejected():
    with pytest.raises(PreconditionError):
        apply(RobotState(Cell(1, 1), e=100), Recharge(1), emax=100, delta_max=10)


def test_apply_energy_underflow():
    with pytest.raises(EnergyError):
        apply(RobotState(Cell(1, 1), e=0), E, emax=10, delta_max=5)


def test_apply_motion_requires_stationary():
    with pytest.raises(PreconditionError):
        apply(RobotState(Cell(1, 1), v=1, e=5), E, emax=10, delta_max=5)


def test_apply_recharge_bounds_delta():
    with pytest.raises(PreconditionError):
        apply(RobotState(Cell(1, 1), e=5), Recharge(11), emax=100, delta_max=10)
    with pytest.raises(PreconditionError):
        apply(RobotState(Cell(1, 1), e=5), Recharge(0), emax=100, delta_max=10)


def test_recharge_steps_needed_examples():
    assert recharge_steps_needed(75, 100, 10) == 3
    assert recharge_steps_needed(100, 100, 10) == 0
    assert recharge_steps_needed(0, 100, 14) == 8


def test_recharge_steps_needed_domain():
    with pytest.raises(DomainError):
        recharge_steps_needed(5, 10, 0)
    with pytest.raises(DomainError):
        recharge_steps_needed(11, 10, 2)


@settings(max_examples=300, deadline=None)
@given(
    emax=st.integers(1, 500),
    frac=st.floats(0, 1),
    delta_max=st.integers(1, 60),
)
def test_recharge_steps_matches_counting_oracle(emax, frac, delta_max):
    e = int(emax * frac)
    assert recharge_steps_needed(e, emax, delta_max) == refill_steps_oracle(e, emax, delta_max)


def test_energy_telescopes_over_sequences():
    seq = [E, WAIT, S, Recharge(2), WAIT, W, Recharge(1)]
    state = RobotState(Cell(1, 1), e=4)
    total_cost = sum(p.cost for p in seq if isinstance(p, MotionPrimitive))
    total_gain = sum(p.delta for p in seq if isinstance(p, Recharge))
    for prim in seq:
        state = apply(state, prim, emax=6, delta_max=3)
        assert 0 <= state.e <= 6
    assert state.e == 4 - total_cost + total_gain


def test_loop_traversal_returns_home():
    loop = square_loop()
    state = RobotState(loop.home, e=10)
    cursor = LoopCursor()
    for _ in range(len(loop.cells)):
        move = loop.moves[cursor.index - 1]
        state = apply(state, move, emax=10, delta_max=5)
        cursor = advance_cursor(cursor, move, loop)
    assert state.p == loop.home
    assert cursor == LoopCursor(1)
    assert state.e == 10 - loop.total_cost


def test_loop_geometry_validated():
    with pytest.raises(DomainError):
        WorkingLoop((Cell(0, 0), Cell(1, 0)), (E, E))  # second E does not return home
    with pytest.raises(DomainError):
        WorkingLoop((Cell(0, 0), Cell(0, 0)), (E, W))  # duplicate cells


def test_closed_points_constructor():
    loop = WorkingLoop.from_closed_points(
        [Cell(0, 0), Cell(1, 0), Cell(0, 0)], [E, W]
    )
    assert loop.cells == (Cell(0, 0), Cell(1, 0))
    assert loop.closed_length == 3
    with pytest.raises(DomainError):
        WorkingLoop.from_closed_points([Cell(0, 0), Cell(1, 0)], [E])


def test_cursor_rules():
    loop = square_loop()
    assert advance_cursor(LoopCursor(3), WAIT, loop) == LoopCursor(3)
    assert advance_cursor(LoopCursor(3), Recharge(1), loop) == LoopCursor(3)
    last = len(loop.cells)
    assert advance_cursor(LoopCursor(last), loop.moves[last - 1], loop) == LoopCursor(1)
    with pytest.raises(LoopOrderError):
        advance_cursor(LoopCursor(2), S, loop)  # expected E at index 2


def test_motion_primitive_validation():
    with pytest.raises(DomainError):
        MotionPrimitive("bad", 1, 0, cost=-1)
    with pytest.raises(DomainError):
        MotionPrimitive("bad", 1, 0, 1, ((1, 0),))
    dash = MotionPrimitive("EE", 2, 0, 3, ((0, 0), (1, 0), (2, 0)))
    assert dash.disp == (2, 0)
