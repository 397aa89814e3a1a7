from __future__ import annotations

import math

import pytest

from affordbench.world import (
    OPPOSITE,
    OUTWARD_NORMALS,
    PUSH_SIDES,
    Block,
    EndEffector,
    PickPlaceState,
    Point2,
    Side,
    WorldState,
    functional_parts,
    off_table,
    square_gap,
    world_from_dict,
    world_to_dict,
)
from conftest import make_state


def test_point_rejects_nan():
    with pytest.raises(ValueError):
        Point2(math.nan, 0.0)


def test_point_arithmetic():
    p = Point2(0.1, 0.2) + Point2(0.3, 0.4)
    assert p.as_list() == pytest.approx([0.4, 0.6])
    assert Point2(3, 4).norm() == 5
    assert Point2(2, -1).clamped() == Point2(1, 0)


def test_parts_order_and_midpoints():
    parts = functional_parts(Block("red block", "red", Point2(0.5, 0.5)))
    assert [p.side for p in parts] == list(PUSH_SIDES)
    assert parts[0].midpoint == Point2(0.5, 0.46)
    assert parts[3].midpoint == Point2(0.54, 0.5)
    for p in parts:
        # pushing a side moves the block opposite to that side's outward normal
        assert p.push_direction == OUTWARD_NORMALS[p.side].scale(-1)


def test_opposite_is_involution():
    for s in PUSH_SIDES:
        assert OPPOSITE[OPPOSITE[s]] is s
    assert Side.CENTER not in OPPOSITE


@pytest.mark.parametrize(
    "center,expected",
    [((0.5, 0.5), False), ((1.0, 0.5), False), ((1.0001, 0.5), True), ((0.5, -0.01), True)],
)
def test_off_table_is_closed_on_the_boundary(center, expected):
    assert off_table(Block("b", "red", Point2(*center))) is expected


def test_square_gap():
    a = Block("a", "red", Point2(0.5, 0.5))
    assert square_gap(a, Block("b", "red", Point2(0.58, 0.5))) == pytest.approx(0.0)
    assert square_gap(a, Block("b", "red", Point2(0.6, 0.5))) == pytest.approx(0.02)
    assert square_gap(a, Block("b", "red", Point2(0.6, 0.6))) == pytest.approx(math.hypot(0.02, 0.02))


def test_state_validation():
    with pytest.raises(ValueError):
        make_state([("red block", 0.2, 0.2), ("red block", 0.6, 0.6)], (0.5, 0.1))
    with pytest.raises(ValueError):
        WorldState((), EndEffector(Point2(1.5, 0.5)))
    with pytest.raises(ValueError):
        EndEffector(Point2(0.5, 0.5), radius=0)


def test_pickplace_validity():
    assert PickPlaceState(pegs=((3, 2, 1), (), ())).is_valid()
    assert not PickPlaceState(pegs=((2, 3), (1,), ())).is_valid()
    assert not PickPlaceState(pegs=((3, 2), (1,), ()), held=1).is_valid()
    pp = PickPlaceState(pegs=((3,), (2,), ()), held=1)
    assert pp.rings() == [1, 2, 3]
    assert pp.peg_of(2) == 2 and pp.peg_of(1) is None


def test_serialization_round_trip():
    from affordbench.tasks import sample_task

    for kind in ("b2p", "hanoi", "bowl"):
        state = sample_task(kind, 3).initial
        assert world_from_dict(world_to_dict(state)) == state
