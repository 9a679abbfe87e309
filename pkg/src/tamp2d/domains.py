"""Problem generators: five pick-and-place domains plus two visualization domains.

Generation is deterministic in the seed. Initial states are rejection-sampled
until valid, movables start outside their target container, and the goal asks
for every movable to end up contained.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .geom2d import (
    OrientedRect,
    Pose2,
    Vec2,
    circle_rect_overlap,
    nearest_point_on_rect,
    rect_in_rect,
    rects_overlap,
)
from .world import (
    GRIP_MAX,
    IN,
    ROBOT_RADIUS,
    ROOM_HALF,
    ControllerKind,
    GroundAbstractAction,
    GroundAtom,
    ObjectInstance,
    ObjectType,
    Operator,
    RegionKind,
    RobotState,
    WorldState,
    default_room,
    make_object,
    make_operators,
    navigation_pose,
    simulate,
    state_from_json,
    state_to_json,
)

MAX_REJECTION_ATTEMPTS = 10_000


class GenerationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    name: str
    movable_type: ObjectType
    container_type: ObjectType
    # type name -> ((w_lo, w_hi), (l_lo, l_hi)), full side lengths
    size_ranges: dict
    object_count_range: tuple[int, int]
    square_types: tuple[str, ...] = ()
    container_against_wall: bool = False

    def types(self) -> tuple[ObjectType, ObjectType]:
        return self.movable_type, self.container_type

    def operators(self) -> list[Operator]:
        return make_operators([self.movable_type], [self.container_type])


@dataclass(frozen=True)
class Problem:
    init: WorldState
    goal: frozenset[GroundAtom]
    domain: str
    seed: int


BOOK = ObjectType("book", movable=True)
SHELF = ObjectType("shelf", movable=False)
CUP = ObjectType("cup", movable=True, handle_only=True)
CUPBOARD = ObjectType("cupboard", movable=False)
BOX = ObjectType("box", movable=True)
TRAY = ObjectType("tray", movable=False, region=RegionKind.END_POCKETS)
STICK = ObjectType("stick", movable=True)
STICK_CONTAINER = ObjectType("container", movable=False, region=RegionKind.ORIENTED)
BLOCK = ObjectType("block", movable=True)
BIN = ObjectType("bin", movable=False)
L_CONTAINER = ObjectType("l_container", movable=False, region=RegionKind.L_ARMS)

DOMAINS: dict[str, DomainSpec] = {
    "Books": DomainSpec(
        name="Books",
        movable_type=BOOK,
        container_type=SHELF,
        size_ranges={"book": ((0.5, 1.0), (1.0, 1.5)), "shelf": ((2.0, 5.0), (5.0, 10.0))},
        object_count_range=(4, 5),
    ),
    "Cups": DomainSpec(
        name="Cups",
        movable_type=CUP,
        container_type=CUPBOARD,
        size_ranges={"cup": ((0.5, 1.0), (0.5, 1.0)), "cupboard": ((2.0, 5.0), (5.0, 10.0))},
        object_count_range=(4, 5),
        square_types=("cup",),
        container_against_wall=True,
    ),
    "Boxes": DomainSpec(
        name="Boxes",
        movable_type=BOX,
        container_type=TRAY,
        size_ranges={"box": ((0.5, 1.0), (1.0, 1.5)), "tray": ((3.0, 5.0), (11.0, 13.0))},
        object_count_range=(4, 5),
    ),
    "Sticks": DomainSpec(
        name="Sticks",
        movable_type=STICK,
        container_type=STICK_CONTAINER,
        size_ranges={"stick": ((0.5, 1.0), (5.0, 6.0)), "container": ((3.0, 5.0), (7.0, 10.0))},
        object_count_range=(4, 5),
    ),
    "Blocks": DomainSpec(
        name="Blocks",
        movable_type=BLOCK,
        container_type=BIN,
        size_ranges={"block": ((0.25, 0.5), (0.25, 0.5)), "bin": ((4.0, 6.0), (4.0, 6.0))},
        object_count_range=(9, 10),
        square_types=("block", "bin"),
    ),
}

MAIN_DOMAIN_NAMES = tuple(DOMAINS)

# Type name -> domain name, for routing pooled training data.
TYPE_DOMAIN: dict[str, str] = {}
for _spec in DOMAINS.values():
    TYPE_DOMAIN[_spec.movable_type.name] = _spec.name
    TYPE_DOMAIN[_spec.container_type.name] = _spec.name


def domain_of_types(type_names) -> str:
    domains = {TYPE_DOMAIN[t] for t in type_names if t in TYPE_DOMAIN}
    if len(domains) != 1:
        raise KeyError(f"cannot resolve domain for types {tuple(type_names)}")
    return next(iter(domains))


class _Budget:
    def __init__(self, limit: int) -> None:
        self.left = limit

    def spend(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise GenerationFailed(f"no valid initial state within {MAX_REJECTION_ATTEMPTS} attempts")


def _draw_size(spec: DomainSpec, type_name: str, rng: np.random.Generator) -> tuple[float, float]:
    (w_lo, w_hi), (l_lo, l_hi) = spec.size_ranges[type_name]
    if type_name in spec.square_types:
        side = rng.uniform(w_lo, w_hi)
        return side / 2.0, side / 2.0
    return rng.uniform(w_lo, w_hi) / 2.0, rng.uniform(l_lo, l_hi) / 2.0


def _sample_center(rng: np.random.Generator, hw: float, hl: float, theta: float) -> Vec2 | None:
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    ax = c * hw + s * hl
    ay = s * hw + c * hl
    if ax > ROOM_HALF or ay > ROOM_HALF:
        return None
    return Vec2(
        rng.uniform(-ROOM_HALF + ax, ROOM_HALF - ax),
        rng.uniform(-ROOM_HALF + ay, ROOM_HALF - ay),
    )


def _place_container(spec: DomainSpec, rng: np.random.Generator, budget: "_Budget") -> ObjectInstance:
    hw, hl = _draw_size(spec, spec.container_type.name, rng)
    if spec.container_against_wall:
        if hl > ROOM_HALF or hw > ROOM_HALF:
            raise GenerationFailed("container does not fit the room")
        wall = int(rng.integers(0, 4))
        theta = wall * math.pi / 2.0
        along = rng.uniform(-ROOM_HALF + hl, ROOM_HALF - hl)
        depth = ROOM_HALF - hw
        center = {
            0: Vec2(depth, along),
            1: Vec2(along, depth),
            2: Vec2(-depth, along),
            3: Vec2(along, -depth),
        }[wall]
        return make_object("container0", spec.container_type, center, theta, hw, hl)
    while True:
        budget.spend()
        theta = rng.uniform(-math.pi, math.pi)
        center = _sample_center(rng, hw, hl, theta)
        if center is not None:
            return make_object("container0", spec.container_type, center, theta, hw, hl)


def gen_problem(spec: DomainSpec, seed: int) -> Problem:
    """Deterministic problem draw; raises GenerationFailed after 10,000 rejections."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    rng = np.random.default_rng(int(seed))
    budget = _Budget(MAX_REJECTION_ATTEMPTS)
    n = int(rng.integers(spec.object_count_range[0], spec.object_count_range[1] + 1))
    container = _place_container(spec, rng, budget)
    placed: list[ObjectInstance] = [container]

    def collides(rect: OrientedRect) -> bool:
        return any(
            rects_overlap(rect, fr) for other in placed for fr in other.footprint_rects()
        )

    movables: list[ObjectInstance] = []
    for i in range(n):
        hw, hl = _draw_size(spec, spec.movable_type.name, rng)
        while True:
            budget.spend()
            theta = rng.uniform(-math.pi, math.pi)
            center = _sample_center(rng, hw, hl, theta)
            if center is None:
                continue
            candidate = make_object(f"{spec.movable_type.name}{i}", spec.movable_type, center, theta, hw, hl)
            if collides(candidate.rect):
                continue
            placed.append(candidate)
            movables.append(candidate)
            break

    # The robot starts out of gripper range of everything, so every skeleton
    # opens with a navigation step.
    robot = None
    while robot is None:
        budget.spend()
        pos = Vec2(
            rng.uniform(-ROOM_HALF + ROBOT_RADIUS, ROOM_HALF - ROBOT_RADIUS),
            rng.uniform(-ROOM_HALF + ROBOT_RADIUS, ROOM_HALF - ROBOT_RADIUS),
        )
        clear = all(
            nearest_point_on_rect(pos, fr)[1] > GRIP_MAX
            for other in placed
            for fr in other.footprint_rects()
        )
        if clear:
            robot = RobotState(Pose2(pos, rng.uniform(-math.pi, math.pi)))

    init = WorldState(robot, tuple([container, *movables]), default_room())
    goal = frozenset(GroundAtom(IN, (m.id, container.id)) for m in movables)
    return Problem(init, goal, spec.name, int(seed))


# ---------------------------------------------------------------------------
# Problem serialization

PROBLEM_SCHEMA_VERSION = 1


def problem_to_json(problem: Problem) -> dict:
    return {
        "version": PROBLEM_SCHEMA_VERSION,
        "domain": problem.domain,
        "seed": problem.seed,
        "init": state_to_json(problem.init),
        "goal": sorted([a.predicate, *a.args] for a in problem.goal),
    }


def problem_from_json(d: dict) -> Problem:
    goal = frozenset(GroundAtom(g[0], tuple(g[1:])) for g in d["goal"])
    return Problem(state_from_json(d["init"]), goal, d["domain"], d["seed"])


def problem_dumps(problem: Problem) -> str:
    return json.dumps(problem_to_json(problem), sort_keys=True)


# ---------------------------------------------------------------------------
# Visualization domains


PUSH_BLOCK = "PushBlock"
L_CONTAINER_DOMAIN = "LContainer"
ONE_STEP = "OneStep"
N_STEP = "NStep"


def _push_block_state(rng: np.random.Generator) -> WorldState:
    side = rng.uniform(1.0, 2.0)
    h = side / 2.0
    block = make_object(
        "block0", BLOCK, Vec2(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 3.0)), 0.0, h, h
    )
    while True:
        pos = Vec2(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0))
        if not circle_rect_overlap(pos, ROBOT_RADIUS, block.rect):
            break
    robot = RobotState(Pose2(pos, rng.uniform(-math.pi, math.pi)))
    return WorldState(robot, (block,), default_room())


def _push_nav_action(state: WorldState) -> GroundAbstractAction:
    op = make_operators([BLOCK], [])[0]
    return GroundAbstractAction(op, ("block0",))


def push_below_region(state: WorldState, phi: np.ndarray) -> bool:
    """Analytic success predicate: a valid approach that contacts the bottom edge.

    The block is axis-aligned; pushing straight up succeeds iff the robot sits
    strictly below the bottom edge within the block's x-span.
    """
    out = simulate(state, _push_nav_action(state), phi)
    if not isinstance(out, WorldState):
        return False
    block = state.obj("block0").rect
    pos = out.robot.pose.position
    return (
        abs(pos.x - block.center.x) <= block.half_w
        and pos.y < block.center.y - block.half_l
    )


def push_one_step(state: WorldState, phi: np.ndarray) -> bool:
    return isinstance(simulate(state, _push_nav_action(state), phi), WorldState)


_L_LONG_HW, _L_LONG_HL = 1.0, 4.0
_SHORT_BLOCK_HW, _SHORT_BLOCK_HL = 0.75, 0.4
_LONG_BLOCK_HW, _LONG_BLOCK_HL = 0.4, 2.5


def _l_container_state(rng: np.random.Generator) -> WorldState:
    container = make_object(
        "container0",
        L_CONTAINER,
        Vec2(rng.uniform(-4.0, 4.0), rng.uniform(-3.0, 3.0)),
        0.0,
        _L_LONG_HW,
        _L_LONG_HL,
    )
    short_block = make_object(
        "block_short", BLOCK, Vec2(-8.5, -8.5), 0.0, _SHORT_BLOCK_HW, _SHORT_BLOCK_HL
    )
    long_block = make_object(
        "block_long", BLOCK, Vec2(-8.5, -5.5), 0.0, _LONG_BLOCK_HW, _LONG_BLOCK_HL
    )
    robot = RobotState(Pose2(Vec2(8.5, -8.5), 0.0))
    return WorldState(robot, (container, short_block, long_block), default_room())


def l_one_step(state: WorldState, phi: np.ndarray) -> bool:
    """Short block placed at phi lies fully inside one of the two arms."""
    container = state.obj("container0")
    rect = OrientedRect(Vec2(float(phi[0]), float(phi[1])), _SHORT_BLOCK_HW, _SHORT_BLOCK_HL, 0.0)
    return any(rect_in_rect(rect, arm) for arm in container.placement_rects())


def l_n_step(state: WorldState, phi: np.ndarray) -> bool:
    """Valid short-block placement that still leaves room for the long block.

    The long block only fits the long arm; it can dodge the short block with
    an x-shift or a y-shift, which gives closed-form feasibility bounds.
    """
    if not l_one_step(state, phi):
        return False
    c = state.obj("container0").rect.center
    sx_min = float(phi[0]) - _SHORT_BLOCK_HW - c.x
    sx_max = float(phi[0]) + _SHORT_BLOCK_HW - c.x
    sy_min = float(phi[1]) - _SHORT_BLOCK_HL - c.y
    sy_max = float(phi[1]) + _SHORT_BLOCK_HL - c.y
    # Separation threshold per axis: 2*block_half - arm_half.
    tx = 2 * _LONG_BLOCK_HW - _L_LONG_HW
    ty = 2 * _LONG_BLOCK_HL - _L_LONG_HL
    return sx_min >= tx or sx_max <= -tx or sy_min >= ty or sy_max <= -ty


def _l_phi_sampler(state: WorldState, rng: np.random.Generator) -> np.ndarray:
    c = state.obj("container0").rect.center
    return np.array(
        [rng.uniform(c.x - 2.0, c.x + 3.0), rng.uniform(c.y - 5.0, c.y + 5.0)]
    )


def viz_predicate(kind: str, horizon: str):
    if kind == PUSH_BLOCK:
        return push_one_step if horizon == ONE_STEP else push_below_region
    if kind == L_CONTAINER_DOMAIN:
        return l_one_step if horizon == ONE_STEP else l_n_step
    raise ValueError(f"unknown viz domain: {kind}")


def viz_conditioning(kind: str, state: WorldState) -> np.ndarray:
    if kind == PUSH_BLOCK:
        return np.concatenate([state.obj("block0").features, state.robot.features()])
    return np.concatenate([state.obj("container0").features, state.obj("block_short").features])


def viz_param_bounds(kind: str) -> np.ndarray:
    if kind == PUSH_BLOCK:
        return ControllerKind.NAVIGATE_TO.param_bounds
    return np.array([[-ROOM_HALF, ROOM_HALF], [-ROOM_HALF, ROOM_HALF]])


def gen_viz_dataset(kind: str, horizon: str, n: int, seed: int) -> list[tuple[WorldState, np.ndarray]]:
    """Accepted (state, phi) pairs for a visualization domain and horizon."""
    if n <= 0:
        raise ValueError("n must be positive")
    if horizon not in (ONE_STEP, N_STEP):
        raise ValueError(f"unknown horizon: {horizon}")
    predicate = viz_predicate(kind, horizon)
    rng = np.random.default_rng(int(seed))
    out: list[tuple[WorldState, np.ndarray]] = []
    while len(out) < n:
        state = _push_block_state(rng) if kind == PUSH_BLOCK else _l_container_state(rng)
        for _ in range(200):
            if kind == PUSH_BLOCK:
                phi = rng.uniform(-3.0, 3.0, size=2)
            else:
                phi = _l_phi_sampler(state, rng)
            if predicate(state, phi):
                out.append((state, phi))
                break
    return out


def viz_records_to_jsonl(records: list[tuple[WorldState, np.ndarray]]) -> str:
    lines = [
        json.dumps({"state": state_to_json(s), "phi": np.asarray(p).tolist()}, sort_keys=True)
        for s, p in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")
