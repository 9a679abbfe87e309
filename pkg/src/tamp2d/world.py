"""Symbolic + continuous world model for the 2D pick-and-place simulator.

States hold object feature vectors plus a disc robot with a ray gripper.
Operators carry predicate-level preconditions/effects and a parameterized
controller; `simulate` applies controllers at the continuous level and
guarantees the resulting state passes `valid`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .geom2d import (
    OrientedRect,
    Pose2,
    Vec2,
    angle_between_axes,
    circle_in_rect,
    circle_rect_overlap,
    nearest_point_on_rect,
    nearest_point_on_segment,
    point_in_rect,
    rect_in_rect,
    rects_overlap,
    segment_crosses_rect_interior,
    wrap_angle,
)

ROBOT_RADIUS = 0.5
GRIP_MIN = 0.5
GRIP_MAX = 3.0
NAV_MARGIN = ROBOT_RADIUS
ROOM_HALF = 10.0

# Object feature vector layout (one row per object).
FEAT_X, FEAT_Y, FEAT_SIN, FEAT_COS, FEAT_HW, FEAT_HL, FEAT_HANDLE, FEAT_REGION = range(8)
OBJECT_FEATURE_DIM = 8
ROBOT_FEATURE_DIM = 6

ORIENTED_FIT_TOLERANCE = math.radians(15.0)


class RegionKind(enum.IntEnum):
    """How a container's placement region relates to its footprint."""

    PLAIN = 0
    END_POCKETS = 1
    ORIENTED = 2
    L_ARMS = 3


@dataclass(frozen=True)
class ObjectType:
    name: str
    movable: bool
    handle_only: bool = False
    region: RegionKind = RegionKind.PLAIN


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    type: ObjectType
    features: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.features.shape != (OBJECT_FEATURE_DIM,):
            raise ValueError(f"bad feature vector for {self.id}: {self.features.shape}")

    @property
    def pose(self) -> Pose2:
        f = self.features
        return Pose2(Vec2(f[FEAT_X], f[FEAT_Y]), math.atan2(f[FEAT_SIN], f[FEAT_COS]))

    @property
    def rect(self) -> OrientedRect:
        f = self.features
        return OrientedRect(
            Vec2(f[FEAT_X], f[FEAT_Y]),
            f[FEAT_HW],
            f[FEAT_HL],
            math.atan2(f[FEAT_SIN], f[FEAT_COS]),
        )

    def moved_to(self, position: Vec2, theta: float) -> "ObjectInstance":
        f = self.features.copy()
        f[FEAT_X], f[FEAT_Y] = position.x, position.y
        f[FEAT_SIN], f[FEAT_COS] = math.sin(theta), math.cos(theta)
        return ObjectInstance(self.id, self.type, f)

    def handle_segment(self) -> tuple[Vec2, Vec2]:
        """The graspable handle side: the +x side of the local frame."""
        r = self.rect
        return (
            r.to_world(Vec2(r.half_w, -r.half_l)),
            r.to_world(Vec2(r.half_w, r.half_l)),
        )

    def footprint_rects(self) -> list[OrientedRect]:
        """Rect decomposition of the object's physical footprint."""
        r = self.rect
        if self.type.region == RegionKind.L_ARMS:
            return [r, _l_short_arm(r)]
        return [r]

    def placement_rects(self) -> list[OrientedRect]:
        """Where a movable may legally be placed to count as contained."""
        r = self.rect
        kind = self.type.region
        if kind == RegionKind.END_POCKETS:
            # Two square pockets of side 2*half_w at the extreme ends of the
            # long axis; the middle strip is not placeable.
            w = r.half_w
            return [
                OrientedRect(r.to_world(Vec2(0.0, r.half_l - w)), w, w, r.theta),
                OrientedRect(r.to_world(Vec2(0.0, -(r.half_l - w))), w, w, r.theta),
            ]
        if kind == RegionKind.L_ARMS:
            return [r, _l_short_arm(r)]
        return [r]


def _l_short_arm(long_arm: OrientedRect) -> OrientedRect:
    """Short arm of an L-shaped container whose long arm is the object rect.

    The short arm extends in local +x at the local -y end, sharing the corner.
    """
    hw, hl = 1.5, 1.0
    center = long_arm.to_world(Vec2(hw - long_arm.half_w, -(long_arm.half_l - hl)))
    return OrientedRect(center, hw, hl, long_arm.theta)


def make_object(
    obj_id: str,
    obj_type: ObjectType,
    position: Vec2,
    theta: float,
    half_w: float,
    half_l: float,
) -> ObjectInstance:
    feats = np.array(
        [
            position.x,
            position.y,
            math.sin(theta),
            math.cos(theta),
            half_w,
            half_l,
            1.0 if obj_type.handle_only else 0.0,
            float(obj_type.region),
        ],
        dtype=np.float64,
    )
    return ObjectInstance(obj_id, obj_type, feats)


@dataclass(frozen=True)
class RobotState:
    pose: Pose2
    gripper_extension: float = 0.0
    held_object: Optional[str] = None
    # Orientation of the held object relative to the robot heading, fixed at
    # pick time (rigid grasp); restored on placement.
    held_grasp_offset: float = 0.0

    def features(self) -> np.ndarray:
        p = self.pose
        release = p.theta + self.held_grasp_offset
        return np.array(
            [
                p.position.x,
                p.position.y,
                math.sin(p.theta),
                math.cos(p.theta),
                math.sin(release),
                math.cos(release),
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class WorldState:
    robot: RobotState
    objects: tuple[ObjectInstance, ...]
    room: OrientedRect

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.robot.held_object is not None and self.robot.held_object not in self.ids():
            raise ValueError(f"held object {self.robot.held_object} does not exist")

    def ids(self) -> list[str]:
        return [o.id for o in self.objects]

    def obj(self, obj_id: str) -> ObjectInstance:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(obj_id)

    def with_robot(self, robot: RobotState) -> "WorldState":
        return WorldState(robot, self.objects, self.room)

    def with_object(self, obj: ObjectInstance) -> "WorldState":
        objs = tuple(obj if o.id == obj.id else o for o in self.objects)
        return WorldState(self.robot, objs, self.room)


def default_room() -> OrientedRect:
    return OrientedRect(Vec2(0.0, 0.0), ROOM_HALF, ROOM_HALF, 0.0)


# ---------------------------------------------------------------------------
# Controllers


class ControllerKind(enum.Enum):
    NAVIGATE_TO = "NavigateTo"
    PICK = "Pick"
    PLACE = "Place"

    @property
    def param_dim(self) -> int:
        return {_NAV: 2, _PICK: 2, _PLACE: 1}[self]

    @property
    def param_bounds(self) -> np.ndarray:
        """Per-dimension [lo, hi] bounds, shape (param_dim, 2)."""
        if self is ControllerKind.NAVIGATE_TO:
            return np.array([[-3.0, 3.0], [-3.0, 3.0]])
        if self is ControllerKind.PICK:
            return np.array([[GRIP_MIN, GRIP_MAX], [-math.pi, math.pi]])
        return np.array([[GRIP_MIN, GRIP_MAX]])


_NAV = ControllerKind.NAVIGATE_TO
_PICK = ControllerKind.PICK
_PLACE = ControllerKind.PLACE


def phi_in_bounds(controller: ControllerKind, phi: np.ndarray) -> bool:
    bounds = controller.param_bounds
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (controller.param_dim,):
        return False
    return bool(np.all(phi >= bounds[:, 0] - 1e-12) and np.all(phi <= bounds[:, 1] + 1e-12))


# ---------------------------------------------------------------------------
# Atoms and operators

HAND_EMPTY = "HandEmpty"
HOLDING = "Holding"
REACHABLE = "Reachable"
IN = "In"
ON_FLOOR = "OnFloor"


@dataclass(frozen=True, order=True)
class GroundAtom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True)
class LiftedAtom:
    predicate: str
    params: tuple[int, ...] = ()

    def ground(self, bindings: Sequence[str]) -> GroundAtom:
        return GroundAtom(self.predicate, tuple(bindings[i] for i in self.params))


@dataclass(frozen=True)
class Operator:
    name: str
    typed_params: tuple[ObjectType, ...]
    preconditions: frozenset[LiftedAtom]
    add_effects: frozenset[LiftedAtom]
    delete_effects: frozenset[LiftedAtom]
    controller: ControllerKind
    # Predicate whose atoms are all dropped at the abstract level before the
    # add effects apply (navigation moves the robot, so the abstract model
    # treats reachability as exclusive to the new target).
    clears_predicate: Optional[str] = None

    def __post_init__(self) -> None:
        n = len(self.typed_params)
        for atom in self.add_effects | self.delete_effects | self.preconditions:
            if any(i >= n for i in atom.params):
                raise ValueError(f"operator {self.name}: effect variable out of range")


@dataclass(frozen=True)
class TypeSignature:
    controller: ControllerKind
    object_types: tuple[str, ...]

    def key(self) -> str:
        return "__".join([self.controller.value.lower(), *self.object_types])


@dataclass(frozen=True)
class GroundAbstractAction:
    operator: Operator
    bindings: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.bindings) != len(self.operator.typed_params):
            raise ValueError("binding arity mismatch")

    @property
    def controller(self) -> ControllerKind:
        return self.operator.controller

    def signature(self) -> TypeSignature:
        return TypeSignature(self.controller, tuple(t.name for t in self.operator.typed_params))

    def __str__(self) -> str:
        return f"{self.operator.name}({', '.join(self.bindings)})"


def make_operators(
    movable_types: Sequence[ObjectType], container_types: Sequence[ObjectType]
) -> list[Operator]:
    """Instantiate the navigate/pick/place operator schemas for a type set."""
    ops: list[Operator] = []
    for t in [*movable_types, *container_types]:
        ops.append(
            Operator(
                name=f"NavigateTo-{t.name}",
                typed_params=(t,),
                preconditions=frozenset(),
                add_effects=frozenset({LiftedAtom(REACHABLE, (0,))}),
                delete_effects=frozenset(),
                controller=_NAV,
                clears_predicate=REACHABLE,
            )
        )
    for t in movable_types:
        ops.append(
            Operator(
                name=f"Pick-{t.name}",
                typed_params=(t,),
                preconditions=frozenset(
                    {LiftedAtom(HAND_EMPTY), LiftedAtom(REACHABLE, (0,)), LiftedAtom(ON_FLOOR, (0,))}
                ),
                add_effects=frozenset({LiftedAtom(HOLDING, (0,))}),
                delete_effects=frozenset({LiftedAtom(HAND_EMPTY), LiftedAtom(ON_FLOOR, (0,))}),
                controller=_PICK,
            )
        )
        for c in container_types:
            ops.append(
                Operator(
                    name=f"Place-{t.name}-{c.name}",
                    typed_params=(t, c),
                    preconditions=frozenset({LiftedAtom(HOLDING, (0,)), LiftedAtom(REACHABLE, (1,))}),
                    add_effects=frozenset({LiftedAtom(IN, (0, 1)), LiftedAtom(HAND_EMPTY)}),
                    delete_effects=frozenset({LiftedAtom(HOLDING, (0,))}),
                    controller=_PLACE,
                )
            )
    return ops


def ground_operators(operators: Sequence[Operator], state: WorldState) -> list[GroundAbstractAction]:
    """All type-consistent groundings, in deterministic order."""
    by_type: dict[str, list[str]] = {}
    for o in sorted(state.objects, key=lambda o: o.id):
        by_type.setdefault(o.type.name, []).append(o.id)
    ground: list[GroundAbstractAction] = []
    for op in sorted(operators, key=lambda op: op.name):
        pools = [by_type.get(t.name, []) for t in op.typed_params]
        stack: list[tuple[str, ...]] = [()]
        for pool in pools:
            stack = [b + (x,) for b in stack for x in pool]
        for bindings in stack:
            if len(set(bindings)) == len(bindings):
                ground.append(GroundAbstractAction(op, bindings))
    return ground


def apply_abstract(atoms: frozenset[GroundAtom], action: GroundAbstractAction) -> Optional[frozenset[GroundAtom]]:
    """Abstract successor; None if preconditions do not hold."""
    op, b = action.operator, action.bindings
    for pre in op.preconditions:
        if pre.ground(b) not in atoms:
            return None
    out = set(atoms)
    if op.clears_predicate is not None:
        out = {a for a in out if a.predicate != op.clears_predicate}
    for eff in op.delete_effects:
        out.discard(eff.ground(b))
    for eff in op.add_effects:
        out.add(eff.ground(b))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Predicates over continuous states


def object_contained(obj: ObjectInstance, container: ObjectInstance) -> bool:
    """True iff obj's rect sits fully inside one of container's placement rects."""
    if obj.type == container.type or not obj.type.movable or container.type.movable:
        return False
    rect = obj.rect
    if container.type.region == RegionKind.ORIENTED:
        if angle_between_axes(rect.theta, container.rect.theta) > ORIENTED_FIT_TOLERANCE + 1e-12:
            return False
    return any(rect_in_rect(rect, region) for region in container.placement_rects())


def interaction_rects(obj: ObjectInstance) -> list[OrientedRect]:
    """Target region for approach distances: pockets for pocketed containers."""
    if obj.type.region == RegionKind.END_POCKETS:
        return obj.placement_rects()
    return obj.footprint_rects()


def nearest_interaction_point(p: Vec2, obj: ObjectInstance) -> tuple[Vec2, float]:
    """Nearest point of the object's interaction region to p.

    Cups resolve to the handle side; pocketed trays to the nearest pocket.
    """
    if obj.type.handle_only:
        a, b = obj.handle_segment()
        return nearest_point_on_segment(p, a, b)
    best: tuple[Vec2, float] | None = None
    for rect in interaction_rects(obj):
        q, d = nearest_point_on_rect(p, rect)
        if best is None or d < best[1]:
            best = (q, d)
    assert best is not None
    return best


def _ray_blocked(state: WorldState, a: Vec2, b: Vec2, ignore: set[str]) -> bool:
    held = state.robot.held_object
    for o in state.objects:
        if o.id in ignore or o.id == held:
            continue
        for rect in o.footprint_rects():
            if segment_crosses_rect_interior(a, b, rect):
                return True
    return False


def reachable(state: WorldState, obj_id: str) -> bool:
    """Within gripper range with an unobstructed ray to the nearest point."""
    obj = state.obj(obj_id)
    center = state.robot.pose.position
    point, dist = nearest_interaction_point(center, obj)
    if dist > GRIP_MAX:
        return False
    return not _ray_blocked(state, center, point, ignore={obj_id})


def abstract_state(state: WorldState) -> frozenset[GroundAtom]:
    """Complete set of true ground atoms over the predicate vocabulary."""
    atoms: set[GroundAtom] = set()
    held = state.robot.held_object
    if held is None:
        atoms.add(GroundAtom(HAND_EMPTY))
    else:
        atoms.add(GroundAtom(HOLDING, (held,)))
    containers = [o for o in state.objects if not o.type.movable]
    for o in state.objects:
        if o.id == held:
            continue
        if reachable(state, o.id):
            atoms.add(GroundAtom(REACHABLE, (o.id,)))
        if o.type.movable:
            contained = False
            for c in containers:
                if object_contained(o, c):
                    atoms.add(GroundAtom(IN, (o.id, c.id)))
                    contained = True
            if not contained:
                atoms.add(GroundAtom(ON_FLOOR, (o.id,)))
    return frozenset(atoms)


def valid(state: WorldState) -> bool:
    """No footprint overlaps, robot clear of non-held objects, room containment."""
    held = state.robot.held_object
    objs = [o for o in state.objects if o.id != held]
    center = state.robot.pose.position
    if not circle_in_rect(center, ROBOT_RADIUS, state.room):
        return False
    for o in objs:
        for rect in o.footprint_rects():
            if not rect_in_rect(rect, state.room):
                return False
        if circle_rect_overlap(center, ROBOT_RADIUS, o.rect) or any(
            circle_rect_overlap(center, ROBOT_RADIUS, r) for r in o.footprint_rects()[1:]
        ):
            return False
    for i, a in enumerate(objs):
        for b in objs[i + 1 :]:
            if not _pair_allowed(a, b):
                return False
    return True


def _pair_allowed(a: ObjectInstance, b: ObjectInstance) -> bool:
    """Overlap is legal only for a movable fully inside a container's footprint."""
    overlap = any(
        rects_overlap(ra, rb) for ra in a.footprint_rects() for rb in b.footprint_rects()
    )
    if not overlap:
        return True
    movable, container = (a, b) if a.type.movable and not b.type.movable else (b, a)
    if not (movable.type.movable and not container.type.movable):
        return False
    return any(rect_in_rect(movable.rect, r) for r in container.footprint_rects())


# ---------------------------------------------------------------------------
# Simulation


class FailureReason(enum.Enum):
    COLLISION = "Collision"
    UNREACHABLE = "Unreachable"
    NOT_GRASPABLE = "NotGraspable"
    OUT_OF_ROOM = "OutOfRoom"
    PRECONDITION_VIOLATED = "PreconditionViolated"


@dataclass(frozen=True)
class Invalid:
    reason: FailureReason


def navigation_pose(target: ObjectInstance, phi: np.ndarray) -> Pose2:
    """Robot pose for navigation parameters: offsets scaled by object size.

    phi is expressed in the target's frame, scaled by (half extent + robot
    radius), and the robot ends up facing the target's center.
    """
    rect = target.rect
    offset = Vec2(
        float(phi[0]) * (rect.half_w + NAV_MARGIN),
        float(phi[1]) * (rect.half_l + NAV_MARGIN),
    )
    position = rect.to_world(offset)
    to_center = rect.center - position
    heading = math.atan2(to_center.y, to_center.x) if to_center.norm() > 1e-12 else 0.0
    return Pose2(position, heading)


def gripper_tip(pose: Pose2, extension: float, angle_offset: float = 0.0) -> Vec2:
    theta = pose.theta + angle_offset
    return Vec2(
        pose.position.x + extension * math.cos(theta),
        pose.position.y + extension * math.sin(theta),
    )


def _grasp_side_ok(obj: ObjectInstance, tip: Vec2) -> bool:
    """Handle-only objects must be gripped on the +x (handle) side."""
    if not obj.type.handle_only:
        return True
    r = obj.rect
    q = r.to_local(tip)
    d_handle = r.half_w - q.x
    others = (q.x + r.half_w, r.half_l - q.y, q.y + r.half_l)
    return all(d_handle <= d + 1e-12 for d in others)


def simulate(state: WorldState, action: GroundAbstractAction, phi: np.ndarray):
    """Apply a ground action with continuous parameters.

    Returns the successor WorldState, or Invalid with a reason code. Successor
    states always satisfy valid().
    """
    phi = np.asarray(phi, dtype=np.float64)
    if not phi_in_bounds(action.controller, phi):
        return Invalid(FailureReason.PRECONDITION_VIOLATED)
    ctrl = action.controller
    if ctrl is _NAV:
        return _simulate_navigate(state, action, phi)
    if ctrl is _PICK:
        return _simulate_pick(state, action, phi)
    return _simulate_place(state, action, phi)


def _simulate_navigate(state: WorldState, action: GroundAbstractAction, phi: np.ndarray):
    target = state.obj(action.bindings[0])
    if state.robot.held_object == target.id:
        return Invalid(FailureReason.PRECONDITION_VIOLATED)
    pose = navigation_pose(target, phi)
    robot = RobotState(pose, 0.0, state.robot.held_object, state.robot.held_grasp_offset)
    new = state.with_robot(robot)
    if not circle_in_rect(pose.position, ROBOT_RADIUS, state.room):
        return Invalid(FailureReason.OUT_OF_ROOM)
    held = robot.held_object
    for o in new.objects:
        if o.id == held:
            continue
        if any(circle_rect_overlap(pose.position, ROBOT_RADIUS, r) for r in o.footprint_rects()):
            return Invalid(FailureReason.COLLISION)
    if not reachable(new, target.id):
        return Invalid(FailureReason.UNREACHABLE)
    return new


def _simulate_pick(state: WorldState, action: GroundAbstractAction, phi: np.ndarray):
    target_id = action.bindings[0]
    target = state.obj(target_id)
    if state.robot.held_object is not None:
        return Invalid(FailureReason.PRECONDITION_VIOLATED)
    if any(object_contained(target, c) for c in state.objects if not c.type.movable):
        return Invalid(FailureReason.PRECONDITION_VIOLATED)
    extension, angle = float(phi[0]), float(phi[1])
    tip = gripper_tip(state.robot.pose, extension, angle)
    if not point_in_rect(tip, target.rect):
        return Invalid(FailureReason.NOT_GRASPABLE)
    if not _grasp_side_ok(target, tip):
        return Invalid(FailureReason.NOT_GRASPABLE)
    if _ray_blocked(state, state.robot.pose.position, tip, ignore={target_id}):
        return Invalid(FailureReason.UNREACHABLE)
    offset = wrap_angle(target.pose.theta - state.robot.pose.theta)
    robot = RobotState(state.robot.pose, extension, target_id, offset)
    new = state.with_robot(robot)
    if not valid(new):
        return Invalid(FailureReason.COLLISION)
    return new


def _simulate_place(state: WorldState, action: GroundAbstractAction, phi: np.ndarray):
    obj_id, container_id = action.bindings
    if state.robot.held_object != obj_id:
        return Invalid(FailureReason.PRECONDITION_VIOLATED)
    container = state.obj(container_id)
    extension = float(phi[0])
    pose = state.robot.pose
    tip = gripper_tip(pose, extension)
    placed = state.obj(obj_id).moved_to(tip, wrap_angle(pose.theta + state.robot.held_grasp_offset))
    if not rect_in_rect(placed.rect, state.room):
        return Invalid(FailureReason.OUT_OF_ROOM)
    if not object_contained(placed, container):
        return Invalid(FailureReason.UNREACHABLE)
    if _ray_blocked(state, pose.position, tip, ignore={obj_id, container_id}):
        return Invalid(FailureReason.UNREACHABLE)
    robot = RobotState(pose, extension, None, 0.0)
    new = state.with_robot(robot).with_object(placed)
    if not valid(new):
        return Invalid(FailureReason.COLLISION)
    return new


# ---------------------------------------------------------------------------
# Conditioning features


def conditioning_vector(state: WorldState, action: GroundAbstractAction) -> np.ndarray:
    """Features of the bound objects plus the robot, for sampler conditioning."""
    parts = [state.obj(obj_id).features for obj_id in action.bindings]
    parts.append(state.robot.features())
    return np.concatenate(parts)


def conditioning_dim(controller: ControllerKind) -> int:
    n_objects = 2 if controller is _PLACE else 1
    return n_objects * OBJECT_FEATURE_DIM + ROBOT_FEATURE_DIM


# ---------------------------------------------------------------------------
# Serialization

STATE_SCHEMA_VERSION = 1


def type_to_json(t: ObjectType) -> dict:
    return {
        "name": t.name,
        "movable": t.movable,
        "handle_only": t.handle_only,
        "region": int(t.region),
    }


def type_from_json(d: dict) -> ObjectType:
    return ObjectType(d["name"], d["movable"], d["handle_only"], RegionKind(d["region"]))


def state_to_json(state: WorldState) -> dict:
    return {
        "version": STATE_SCHEMA_VERSION,
        "room": {
            "center": [state.room.center.x, state.room.center.y],
            "half_w": state.room.half_w,
            "half_l": state.room.half_l,
            "theta": state.room.theta,
        },
        "robot": {
            "x": state.robot.pose.position.x,
            "y": state.robot.pose.position.y,
            "theta": state.robot.pose.theta,
            "gripper_extension": state.robot.gripper_extension,
            "held_object": state.robot.held_object,
            "held_grasp_offset": state.robot.held_grasp_offset,
        },
        "objects": [
            {"id": o.id, "type": type_to_json(o.type), "features": o.features.tolist()}
            for o in state.objects
        ],
    }


def state_from_json(d: dict) -> WorldState:
    if d.get("version") != STATE_SCHEMA_VERSION:
        raise ValueError(f"unsupported state schema version: {d.get('version')}")
    room = OrientedRect(
        Vec2(*d["room"]["center"]), d["room"]["half_w"], d["room"]["half_l"], d["room"]["theta"]
    )
    r = d["robot"]
    robot = RobotState(
        Pose2(Vec2(r["x"], r["y"]), r["theta"]),
        r["gripper_extension"],
        r["held_object"],
        r.get("held_grasp_offset", 0.0),
    )
    objects = tuple(
        ObjectInstance(o["id"], type_from_json(o["type"]), np.array(o["features"]))
        for o in d["objects"]
    )
    return WorldState(robot, objects, room)


def state_dumps(state: WorldState) -> str:
    return json.dumps(state_to_json(state), sort_keys=True)
