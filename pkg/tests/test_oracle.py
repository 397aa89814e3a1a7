from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affordbench.backends.base import CompletionRequest
from affordbench.backends.oracle import (
    HIGH,
    LOW,
    OracleBackend,
    OracleError,
    SceneModel,
    hanoi_moves,
    parse_instruction,
    plan_hanoi,
    plan_push,
    push_waypoints,
    semantics_from_params,
    side_values,
)
from affordbench.backends.pathing import plan_path, segment_hits_box
from affordbench.perception import NoiseConfig, describe, detect, parse_scene
from affordbench.simulator import apply_pick, apply_place
from affordbench.tasks import sample_task
from affordbench.world import PickPlaceState, Point2, Side
from conftest import make_state


def model(state) -> SceneModel:
    scene = describe(detect(state, NoiseConfig.off()), state.effector.center)
    return SceneModel.from_parsed(parse_scene(scene.text), state.effector.radius)


@pytest.mark.parametrize(
    "g,best",
    [((0, 1), Side.BOTTOM), ((0, -1), Side.TOP), ((1, 0), Side.LEFT), ((-1, 0), Side.RIGHT), ((0.7, 0.3), Side.LEFT)],
)
def test_side_values_best_and_opposite(g, best):
    vals = side_values(Point2(*g))
    assert vals[best] == HIGH
    opposite = {Side.BOTTOM: Side.TOP, Side.TOP: Side.BOTTOM, Side.LEFT: Side.RIGHT, Side.RIGHT: Side.LEFT}[best]
    assert vals[opposite] == LOW


def test_side_values_perpendicular_levels():
    # pushing up (from the bottom) still helps when the goal is up and right
    vals = side_values(Point2(0.7, 0.3))
    assert vals[Side.BOTTOM] == 0.5
    assert vals[Side.TOP] == 0.3
    straight = side_values(Point2(0.0, 1.0))
    assert straight[Side.LEFT] == straight[Side.RIGHT] == 0.3


@pytest.mark.parametrize(
    "text,kind,block,other",
    [
        ("push the red block to the top left corner of the table", "b2p", "red block", ""),
        ("move the blue block next to the green block", "b2b", "blue block", "green block"),
        ("separate the yellow block and the red block", "sep", "yellow block", "red block"),
        ("move the red block away from the blue block", "sep", "red block", "blue block"),
    ],
)
def test_parse_instruction(text, kind, block, other):
    sem = parse_instruction(text)
    assert (sem.kind, sem.block, sem.other) == (kind, block, other)


def test_parse_instruction_goal_point():
    sem = parse_instruction("push the red block to the top left corner of the table")
    assert sem.goal == Point2(0.15, 0.85)
    assert sem.goal_name == "top left corner"
    hanoi = parse_instruction("solve towers of hanoi", "there are 3 rings and 3 pegs; the goal peg is peg 2")
    assert hanoi.goal_peg == 2
    with pytest.raises(OracleError):
        parse_instruction("do a little dance")


@pytest.mark.parametrize("kind", ["b2p", "b2b", "sep", "bowl"])
def test_parse_instruction_matches_ground_truth(kind):
    for seed in range(25):
        task = sample_task(kind, seed)
        sem = parse_instruction(task.instruction, task.context)
        truth = semantics_from_params(kind, task.params)
        assert (sem.kind, sem.block, sem.other) == (truth.kind, truth.block, truth.other)
        if kind == "b2p":
            assert sem.goal.dist(truth.goal) < 1e-9
        if kind == "bowl":
            assert (sem.block_color, sem.bowl_color) == (truth.block_color, truth.bowl_color)


def test_plan_push_prefers_goal_side():
    state = make_state([("red block", 0.5, 0.5)], (0.5, 0.3))
    sem = parse_instruction("push the red block to the top center side of the table")
    choice = plan_push(sem, model(state))
    assert choice.side is Side.BOTTOM
    assert choice.output.argmax() == choice.letter
    assert choice.output.affordance[choice.letter] == HIGH
    assert choice.output.subtasks[-1].startswith("push the red block toward")


def test_plan_push_zeroes_off_table_side():
    # the most direct push would shove the red block over the left edge
    state = make_state([("red block", 0.1, 0.5), ("blue block", 0.3, 0.5)], (0.6, 0.2))
    sem = parse_instruction("move the red block away from the blue block")
    scene = model(state)
    choice = plan_push(sem, scene)
    right = scene.letters[("red block", Side.RIGHT)]
    assert choice.output.affordance[right] == 0.0
    assert "off the table" in choice.output.consequences[right]
    assert choice.side is not Side.RIGHT


def test_naive_plan_picks_nearest_side():
    state = make_state([("red block", 0.5, 0.5)], (0.8, 0.5))
    sem = parse_instruction("push the red block to the top center side of the table")
    choice = plan_push(sem, model(state), naive=True)
    assert choice.side is Side.RIGHT
    assert choice.output.affordance == {}


def test_plan_push_missing_block():
    state = make_state([("red block", 0.5, 0.5)], (0.8, 0.5))
    with pytest.raises(OracleError):
        plan_push(parse_instruction("push the blue block to the top left corner"), model(state))


@pytest.mark.parametrize("k", [2, 5, 8])
def test_push_waypoints_length(k):
    state = make_state([("red block", 0.5, 0.5), ("blue block", 0.5, 0.7)], (0.5, 0.9))
    sem = parse_instruction("push the red block to the top center side of the table")
    pts = push_waypoints(sem, model(state), "red block", Side.BOTTOM, k)
    assert len(pts) == k


def test_plan_path_detours_around_block():
    obstacles = [(0.5, 0.5, 0.1)]
    path = plan_path(Point2(0.5, 0.2), Point2(0.5, 0.8), obstacles)
    assert path is not None and path[-1] == Point2(0.5, 0.8)
    legs = zip([Point2(0.5, 0.2)] + path[:-1], path)
    assert not any(segment_hits_box(a, b, (0.5, 0.5, 0.1)) for a, b in legs)
    assert plan_path(Point2(0.5, 0.2), Point2(0.5, 0.5), obstacles) is None


def test_hanoi_moves_full_tower_is_seven():
    moves = hanoi_moves({1: 1, 2: 1, 3: 1}, 3, 3)
    assert len(moves) == 7
    assert moves[0] == (1, 1, 3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=3, max_size=3), st.integers(1, 3))
def test_hanoi_moves_are_legal_from_any_state(pegs_of, goal):
    stacks: list[list[int]] = [[], [], []]
    for size in (3, 2, 1):
        stacks[pegs_of[size - 1] - 1].append(size)
    pp = PickPlaceState(pegs=tuple(tuple(s) for s in stacks))
    positions = {size: pegs_of[size - 1] for size in (1, 2, 3)}
    for ring, src, dst in hanoi_moves(positions, 3, goal):
        assert pp.peg_of(ring) == src
        pp = apply_place(apply_pick(pp, ring), dst)
    assert pp.pegs[goal - 1] == (3, 2, 1)


def test_plan_hanoi_waits_when_a_ring_is_missing():
    task = sample_task("hanoi", 0)
    sem = semantics_from_params("hanoi", task.params)
    dets = detect(task.initial, NoiseConfig.off())
    dets = [d for d in dets if d.label != "blue ring"]
    out = plan_hanoi(sem, parse_scene(describe(dets, task.initial.effector.center, gripper=True).text))
    assert out.subtasks == ["wait at the home position and observe the scene again"]
    assert set(out.affordance.values()) == {0.0}


def test_oracle_backend_unknown_prompt():
    text = OracleBackend().complete(CompletionRequest("s", "hello"))
    assert "do not recognize" in text


def test_oracle_backend_is_deterministic(oracle):
    from affordbench.prompting import PUSH_SKILLS, default_guidelines, render_planner_prompt

    task = sample_task("b2b", 3)
    scene = describe(detect(task.initial, NoiseConfig.off()), task.initial.effector.center)
    prompt = render_planner_prompt(PUSH_SKILLS, default_guidelines(False, 5), task.instruction, scene)
    a = oracle.complete(CompletionRequest("s", prompt))
    assert a == oracle.complete(CompletionRequest("s", prompt))
