"""Episode control loops: the affordance-prompted agent and three baselines."""

from __future__ import annotations

import ast
import logging
import re
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

from .backends.base import Backend, BackendError, CompletionRequest
from .perception import NoiseConfig, SceneDescription, describe, detect
from .prompting import (
    ACTIONS,
    CODE_CALLS,
    GRIPPER_EXAMPLES,
    GRIPPER_SKILLS,
    PUSH_EXAMPLES,
    PUSH_SKILLS,
    ControlSequence,
    ParseError,
    PlannerOutput,
    default_guidelines,
    default_notes,
    parse_controller_response,
    parse_planner_response,
    parse_primitive_action,
    render_code_prompt,
    render_controller_prompt,
    render_planner_prompt,
    render_primitive_prompt,
)
from .records import (
    ACTION_PARSE,
    BACKEND_ERROR,
    CONTROLLER_PARSE,
    MAX_ROUNDS,
    OFF_TABLE,
    PLANNER_PARSE,
    SUCCESS,
    TIMEOUT,
    EpisodeRecord,
    RoundRecord,
)
from .simulator import MICRO_STEP, step_to_waypoint
from .tasks import TaskInstance, check_success
from .world import RING_COLORS, Point2, WorldState, world_to_dict

log = logging.getLogger(__name__)

SYSTEM_PROMPT = "You are a careful robot planning assistant. Follow the requested output format exactly."
RETRY_NOTE = "\nYour previous answer could not be used ({error}). {fix}\n"
RETRY_FIX = {
    "planner": "Answer again with a single JSON object inside a ```json fenced block.",
    "controller": "Answer again with a single JSON object inside a ```json fenced block.",
    "primitive": "Answer again with one 'Thought:' line and one 'Action:' line.",
    "code": "Answer again with a ```python block that only calls the allowed moves.",
}
_SIDE_REF = re.compile(r"side ([A-Z]{1,2}) of the ")


class AgentKind(str, Enum):
    LLM_A = "llm-a"
    NAIVE = "naive"
    PRIMITIVE = "react"
    CODE = "code"


@dataclass
class AgentConfig:
    k: int = 5
    max_rounds: int = 20
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    timeout: Optional[float] = None  # seconds of wall clock per episode
    step: float = 0.05  # primitive move length
    max_steps: int = 100  # primitive and code-style move budget
    max_calls: int = 100  # per code-style script
    max_tokens: int = 1024
    micro_step: float = MICRO_STEP

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.step <= 0:
            raise ValueError("step must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> AgentConfig:
        d = dict(d)
        if isinstance(d.get("noise"), dict):
            d["noise"] = NoiseConfig(**d["noise"])
        return cls(**d)


def count_tokens(text: str) -> int:
    """Whitespace token count; a stand-in for a model tokenizer."""
    return len(text.split())


class _Session:
    """Bookkeeping shared by every loop: backend calls, tokens, clock."""

    def __init__(self, task: TaskInstance, backend: Backend, config: AgentConfig, agent: str):
        self.task = task
        self.backend = backend
        self.config = config
        self.record = EpisodeRecord(task, agent, backend.describe(), config.to_dict())
        self.t0 = time.monotonic()

    def ask(self, rr: RoundRecord, role: str, prompt: str) -> str:
        req = CompletionRequest(SYSTEM_PROMPT, prompt, 0.0, self.config.max_tokens)
        rr.prompts.append({"role": role, "text": prompt})
        text = self.backend.complete(req)
        rr.responses.append({"role": role, "text": text})
        self.record.tokens["prompt"] += count_tokens(SYSTEM_PROMPT) + count_tokens(prompt)
        self.record.tokens["response"] += count_tokens(text)
        return text

    def ask_parsed(self, rr: RoundRecord, role: str, prompt: str, parse: Callable[[str], object]):
        """One call plus at most one corrective retry; raises ParseError."""
        text = self.ask(rr, role, prompt)
        try:
            return parse(text)
        except ParseError as exc:
            rr.retries += 1
            rr.warnings.append(f"{role} parse failed: {exc}")
            text = self.ask(rr, role, prompt + RETRY_NOTE.format(error=exc, fix=RETRY_FIX[role]))
            return parse(text)

    def timed_out(self) -> bool:
        t = self.config.timeout
        return t is not None and time.monotonic() - self.t0 > t

    def succeeded(self, state: WorldState) -> bool:
        return check_success(self.task.kind, state, self.task.params)

    def execute(self, rr: RoundRecord, state: WorldState, points) -> tuple[WorldState, bool]:
        """Run waypoints, checking success after each; returns (state, off_table)."""
        for p in points:
            out = step_to_waypoint(state, p, self.config.micro_step)
            state = out.new_state
            rr.executed.append(list(state.effector.center.as_list()))
            rr.outcomes.append(out.to_dict())
            if out.off_table_events:
                return state, True
            if self.succeeded(state):
                return state, False
        return state, False

    def finish(self, state: WorldState, termination: str) -> EpisodeRecord:
        rec = self.record
        rec.termination = termination
        rec.success = termination == SUCCESS
        rec.final_state = world_to_dict(state)
        rec.wall_time = time.monotonic() - self.t0
        return rec


def held_label(state: WorldState) -> Optional[str]:
    pp = state.pickplace
    if pp is None or pp.held is None:
        return None
    return f"{RING_COLORS[pp.held]} ring" if isinstance(pp.held, int) else str(pp.held)


def _observe(rr: RoundRecord, task: TaskInstance, state: WorldState, config: AgentConfig) -> SceneDescription:
    dets = detect(state, config.noise, seed=[task.seed, rr.index])
    scene = describe(dets, state.effector.center, held_label(state), task.kind.gripper)
    rr.detections = [d.to_dict() for d in dets]
    rr.omitted = list(scene.omitted)
    rr.scene = scene.text
    rr.parts = {ch: [p.owner, p.side.value] for ch, p in scene.part_index.items()}
    return scene


def _chosen_part(out: PlannerOutput, scene: SceneDescription) -> Optional[list[str]]:
    letter = out.argmax()
    if letter is None:
        for s in out.subtasks:
            m = _SIDE_REF.search(s)
            if m:
                letter = m[1]
                break
    part = scene.part_index.get(letter) if letter else None
    return [part.owner, part.side.value] if part else None


def run_llm_a_episode(
    task: TaskInstance, backend: Backend, config: Optional[AgentConfig] = None, naive: bool = False
) -> EpisodeRecord:
    """Perceive, describe, plan, control, execute K waypoints; repeat."""
    config = config or AgentConfig()
    s = _Session(task, backend, config, AgentKind.NAIVE.value if naive else AgentKind.LLM_A.value)
    gripper = task.kind.gripper
    skills = GRIPPER_SKILLS if gripper else PUSH_SKILLS
    examples = GRIPPER_EXAMPLES if gripper else PUSH_EXAMPLES
    guidelines = default_guidelines(gripper, config.k, task.context)
    state = task.initial
    termination = MAX_ROUNDS
    for index in range(config.max_rounds):
        if s.timed_out():
            termination = TIMEOUT
            break
        rr = RoundRecord(index, world_to_dict(state))
        s.record.rounds.append(rr)
        scene = _observe(rr, task, state, config)
        try:
            planner_prompt = render_planner_prompt(skills, guidelines, task.instruction, scene, naive)
            try:
                plan = s.ask_parsed(
                    rr, "planner", planner_prompt,
                    lambda t: parse_planner_response(t, scene, require_affordance=not naive),
                )
            except ParseError as exc:
                rr.warnings.append(f"planner parse failed: {exc}")
                termination = PLANNER_PARSE
                break
            rr.planner = {**plan.to_wire(), "warnings": plan.warnings}
            rr.warnings.extend(plan.warnings)
            rr.chosen = _chosen_part(plan, scene)
            controller_prompt = render_controller_prompt(
                skills, guidelines, task.instruction, scene, plan,
                default_notes(config.k), examples, config.k, naive,
            )
            try:
                seq: ControlSequence = s.ask_parsed(
                    rr, "controller", controller_prompt, lambda t: parse_controller_response(t, config.k)
                )
            except ParseError as exc:
                rr.warnings.append(f"controller parse failed: {exc}")
                termination = CONTROLLER_PARSE
                break
        except BackendError as exc:
            rr.warnings.append(f"backend error: {exc}")
            termination = BACKEND_ERROR
            break
        finally:
            rr.end_state = world_to_dict(state)
        rr.warnings.extend(seq.warnings)
        rr.sequence = [p.as_list() for p in seq.waypoints]
        state, fell = s.execute(rr, state, seq.waypoints)
        rr.end_state = world_to_dict(state)
        if fell:
            termination = OFF_TABLE
            break
        if s.succeeded(state):
            termination = SUCCESS
            break
    return s.finish(state, termination)


def run_naive_episode(task: TaskInstance, backend: Backend, config: Optional[AgentConfig] = None) -> EpisodeRecord:
    """Same loop without consequence or affordance directives."""
    return run_llm_a_episode(task, backend, config, naive=True)


_MOVES = {
    "Move Up": Point2(0.0, 1.0),
    "Move Down": Point2(0.0, -1.0),
    "Move Left": Point2(-1.0, 0.0),
    "Move Right": Point2(1.0, 0.0),
}
assert set(_MOVES) == set(ACTIONS)


def _primitive_target(state: WorldState, action: str, step: float) -> Point2:
    return (state.effector.center + _MOVES[action].scale(step)).clamped()


def _push_detections(task: TaskInstance, state: WorldState, rr: RoundRecord, config: AgentConfig):
    dets = detect(state, config.noise, seed=[task.seed, rr.index])
    rr.detections = [d.to_dict() for d in dets]
    rr.omitted = [d.label for d in dets if not d.detected]
    return dets


def run_primitive_episode(
    task: TaskInstance, backend: Backend, config: Optional[AgentConfig] = None
) -> EpisodeRecord:
    """ReAct-style baseline: one axis move of length ``step`` per model call."""
    config = config or AgentConfig()
    if task.kind.gripper:
        raise ValueError("the primitive baseline only covers pushing tasks")
    s = _Session(task, backend, config, AgentKind.PRIMITIVE.value)
    guidelines = default_guidelines(False, 1, task.context)
    state = task.initial
    termination = MAX_ROUNDS
    for index in range(config.max_steps):
        if s.timed_out():
            termination = TIMEOUT
            break
        rr = RoundRecord(index, world_to_dict(state))
        s.record.rounds.append(rr)
        dets = _push_detections(task, state, rr, config)
        prompt = render_primitive_prompt(guidelines, task.instruction, state.effector.center, dets, config.step)
        rr.end_state = rr.start_state
        try:
            action = s.ask_parsed(rr, "primitive", prompt, parse_primitive_action)
        except ParseError as exc:
            rr.warnings.append(f"action parse failed: {exc}")
            termination = ACTION_PARSE
            break
        except BackendError as exc:
            rr.warnings.append(f"backend error: {exc}")
            termination = BACKEND_ERROR
            break
        target = _primitive_target(state, action, config.step)
        rr.sequence = [target.as_list()]
        state, fell = s.execute(rr, state, [target])
        rr.end_state = world_to_dict(state)
        if fell:
            termination = OFF_TABLE
            break
        if s.succeeded(state):
            termination = SUCCESS
            break
    return s.finish(state, termination)


# --- code-style baseline ------------------------------------------------------------


class CodeError(ParseError):
    """A script uses something outside the whitelisted call set."""


_FENCED_CODE = re.compile(r"```[ \t]*(?:python|py)?[ \t]*\n(.*?)```", re.S | re.I)
_CALL_ACTION = dict(zip(CODE_CALLS, ACTIONS))
MAX_LOOP = 1000


def extract_code(text: str) -> str:
    m = _FENCED_CODE.search(text)
    return m.group(1) if m else text


def interpret_script(source: str, max_calls: int = 100) -> tuple[list[str], list[str]]:
    """Whitelisted interpreter: move_* calls and ``for _ in range(n)`` loops.

    Returns (actions, warnings). Scripts producing more than ``max_calls``
    calls are truncated with a warning.
    """
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise CodeError(f"script does not parse: {exc.msg}") from None
    actions: list[str] = []
    warnings: list[str] = []

    class Truncate(Exception):
        pass

    def int_arg(node: ast.expr) -> int:
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return node.value
        raise CodeError("range() bounds must be integer literals")

    def run(body: list[ast.stmt]) -> None:
        for stmt in body:
            if isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Call):
                call = stmt.value
                if not isinstance(call.func, ast.Name) or call.func.id not in _CALL_ACTION:
                    name = call.func.id if isinstance(call.func, ast.Name) else ast.dump(call.func)
                    raise CodeError(f"call to {name!r} is not allowed")
                if call.args or call.keywords:
                    raise CodeError(f"{call.func.id}() takes no arguments")
                if len(actions) >= max_calls:
                    raise Truncate
                actions.append(_CALL_ACTION[call.func.id])
            elif isinstance(stmt, ast.For):
                it = stmt.iter
                if not (
                    isinstance(it, ast.Call)
                    and isinstance(it.func, ast.Name)
                    and it.func.id == "range"
                    and 1 <= len(it.args) <= 2
                    and not it.keywords
                    and isinstance(stmt.target, ast.Name)
                    and not stmt.orelse
                ):
                    raise CodeError("only 'for <name> in range(n)' loops are allowed")
                bounds = [int_arg(a) for a in it.args]
                n = bounds[0] if len(bounds) == 1 else bounds[1] - bounds[0]
                if n > MAX_LOOP:
                    raise CodeError(f"loop bound {n} exceeds {MAX_LOOP}")
                for _ in range(max(n, 0)):
                    run(stmt.body)
            elif isinstance(stmt, ast.Pass):
                continue
            else:
                raise CodeError(f"statement {type(stmt).__name__} is not allowed")

    try:
        run(tree.body)
    except Truncate:
        warnings.append(f"script exceeded {max_calls} calls; truncated")
        log.warning("code-style script truncated at %d calls", max_calls)
    except RecursionError:
        raise CodeError("script nests too deeply") from None
    if not actions:
        raise CodeError("script makes no move calls")
    return actions, warnings


def parse_script(text: str, max_calls: int = 100) -> tuple[list[str], list[str]]:
    if not isinstance(text, str):
        raise CodeError("response is not text")
    return interpret_script(extract_code(text), max_calls)


def run_codestyle_episode(
    task: TaskInstance, backend: Backend, config: Optional[AgentConfig] = None
) -> EpisodeRecord:
    """Code-as-policies-style baseline: each round the model writes a short script."""
    config = config or AgentConfig()
    if task.kind.gripper:
        raise ValueError("the code-style baseline only covers pushing tasks")
    s = _Session(task, backend, config, AgentKind.CODE.value)
    guidelines = default_guidelines(False, 1, task.context)
    state = task.initial
    termination = MAX_ROUNDS
    steps = 0
    for index in range(config.max_rounds):
        if s.timed_out():
            termination = TIMEOUT
            break
        if steps >= config.max_steps:
            break
        rr = RoundRecord(index, world_to_dict(state))
        s.record.rounds.append(rr)
        dets = _push_detections(task, state, rr, config)
        prompt = render_code_prompt(guidelines, task.instruction, state.effector.center, dets, config.step)
        rr.end_state = rr.start_state
        try:
            actions, warnings = s.ask_parsed(rr, "code", prompt, lambda t: parse_script(t, config.max_calls))
        except ParseError as exc:
            rr.warnings.append(f"script rejected: {exc}")
            termination = ACTION_PARSE
            break
        except BackendError as exc:
            rr.warnings.append(f"backend error: {exc}")
            termination = BACKEND_ERROR
            break
        rr.warnings.extend(warnings)
        actions = actions[: config.max_steps - steps]
        targets = []
        pos = state.effector.center
        for a in actions:
            pos = (pos + _MOVES[a].scale(config.step)).clamped()
            targets.append(pos)
        rr.sequence = [t.as_list() for t in targets]
        state, fell = s.execute(rr, state, targets)
        steps += len(rr.executed)
        rr.end_state = world_to_dict(state)
        if fell:
            termination = OFF_TABLE
            break
        if s.succeeded(state):
            termination = SUCCESS
            break
    return s.finish(state, termination)


RUNNERS = {
    AgentKind.LLM_A: run_llm_a_episode,
    AgentKind.NAIVE: run_naive_episode,
    AgentKind.PRIMITIVE: run_primitive_episode,
    AgentKind.CODE: run_codestyle_episode,
}


def run_episode(
    agent: AgentKind | str, task: TaskInstance, backend: Backend, config: Optional[AgentConfig] = None
) -> EpisodeRecord:
    return RUNNERS[AgentKind(agent)](task, backend, config)
