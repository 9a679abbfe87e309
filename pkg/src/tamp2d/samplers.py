"""Sampler hierarchy: specialized/generic/uniform components with auxiliary
predictors, reliability weighting, and the alternative mixture strategies.

Auxiliary signals measure the intended geometric effect of an action computed
analytically from (state, parameters), without validity simulation. A
component's reliability is the inverse RMS of its auxiliary prediction errors,
each signal first normalized by the precomputed error of random guessing.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diffusion import DiffusionSampler
from .domains import DomainSpec, domain_of_types, gen_problem
from .geom2d import Pose2, Vec2
from .nn import Mlp, Normalizer
from .world import (
    ControllerKind,
    GroundAbstractAction,
    RobotState,
    TypeSignature,
    WorldState,
    conditioning_vector,
    gripper_tip,
    ground_operators,
    navigation_pose,
    nearest_interaction_point,
)

RHO_CAP = 1e6
FIXED_UNSEEN_WEIGHT = 0.5
DRAW_BLOCK = 8

AUX_DIMS = {
    ControllerKind.NAVIGATE_TO: 8,
    ControllerKind.PICK: 4,
    ControllerKind.PLACE: 4,
}


class AuxKind(enum.Enum):
    GEOMETRIC = "geometric"
    DISTANCE = "distance"
    RECONSTRUCTION = "reconstruction"


def aux_signals(
    controller: ControllerKind,
    state: WorldState,
    bindings: Sequence[str],
    phi: np.ndarray,
) -> np.ndarray:
    """Intended geometric effects of an action, in raw world units.

    Navigation: approach distance to the target's interaction region, the
    nearest region point in the target frame, the target robot position in
    world and object frames, and the resulting heading. Pick: gripper tip in
    world and object frames. Place: released center in world and container
    frames.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if controller is ControllerKind.NAVIGATE_TO:
        target = state.obj(bindings[0])
        pose = navigation_pose(target, phi)
        p = pose.position
        near, dist = nearest_interaction_point(p, target)
        near_local = target.rect.to_local(near)
        p_local = target.rect.to_local(p)
        return np.array(
            [dist, near_local.x, near_local.y, p.x, p.y, p_local.x, p_local.y, pose.theta]
        )
    if controller is ControllerKind.PICK:
        target = state.obj(bindings[0])
        tip = gripper_tip(state.robot.pose, float(phi[0]), float(phi[1]))
        local = target.rect.to_local(tip)
        return np.array([tip.x, tip.y, local.x, local.y])
    container = state.obj(bindings[1])
    tip = gripper_tip(state.robot.pose, float(phi[0]))
    local = container.rect.to_local(tip)
    return np.array([tip.x, tip.y, local.x, local.y])


def distance_signal(
    controller: ControllerKind, state: WorldState, bindings: Sequence[str], phi: np.ndarray
) -> np.ndarray:
    """Single distance-to-target signal used by the distance-only strategy."""
    phi = np.asarray(phi, dtype=np.float64)
    if controller is ControllerKind.NAVIGATE_TO:
        return aux_signals(controller, state, bindings, phi)[:1]
    if controller is ControllerKind.PICK:
        target = state.obj(bindings[0])
        tip = gripper_tip(state.robot.pose, float(phi[0]), float(phi[1]))
        return np.array([tip.dist(target.rect.center)])
    container = state.obj(bindings[1])
    tip = gripper_tip(state.robot.pose, float(phi[0]))
    return np.array([tip.dist(container.rect.center)])


def aux_target(
    kind: AuxKind,
    controller: ControllerKind,
    state: WorldState,
    bindings: Sequence[str],
    phi: np.ndarray,
) -> np.ndarray:
    if kind is AuxKind.GEOMETRIC:
        return aux_signals(controller, state, bindings, phi)
    if kind is AuxKind.DISTANCE:
        return distance_signal(controller, state, bindings, phi)
    action_like = _FakeAction(controller, tuple(bindings))
    return conditioning_vector(state, action_like)


@dataclass(frozen=True)
class _FakeAction:
    controller: ControllerKind
    bindings: tuple[str, ...]


def aux_target_from_record(
    kind: AuxKind, controller: ControllerKind, x: np.ndarray, z_geometric: np.ndarray
) -> np.ndarray:
    """Derive a strategy's auxiliary target from a stored experience record.

    Records persist the geometric signal vector; the distance variant reads
    the tip/position entries against the bound object's center from x, and
    reconstruction targets the conditioning features themselves.
    """
    if kind is AuxKind.GEOMETRIC:
        return z_geometric
    if kind is AuxKind.RECONSTRUCTION:
        return x
    if controller is ControllerKind.NAVIGATE_TO:
        return z_geometric[:1]
    # Pick: object center is x[0:2]; Place: container center is x[8:10].
    center = x[0:2] if controller is ControllerKind.PICK else x[8:10]
    tip = z_geometric[0:2]
    return np.array([float(np.hypot(*(tip - center)))])


def reliability(pred: np.ndarray, z: np.ndarray, rand_errors: np.ndarray, cap: float = RHO_CAP) -> float:
    """Inverse RMS of per-signal errors normalized by random-guess errors."""
    pred = np.asarray(pred, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    rand_errors = np.maximum(np.asarray(rand_errors, dtype=np.float64), 1e-12)
    normalized = (pred - z) / rand_errors
    rmse = float(np.sqrt(np.mean(normalized**2)))
    if rmse <= 1.0 / cap:
        return cap
    return 1.0 / rmse


def mixture_weights(rhos: np.ndarray) -> np.ndarray:
    rhos = np.asarray(rhos, dtype=np.float64)
    if np.any(rhos <= 0.0):
        raise ValueError("reliabilities must be positive")
    return rhos / rhos.sum()


# ---------------------------------------------------------------------------
# Random-guess error tables


def build_random_guess_tables(
    spec: DomainSpec, n: int = 100_000, seed: int = 0, per_state: int = 200
) -> dict[str, dict[str, list[float]]]:
    """Monte-Carlo per-signal errors of random guessing, per controller and kind.

    Draws uniform (state, phi) pairs (robot pose re-randomized per draw) and
    reports the RMS difference between two independent signal draws.
    """
    rng = np.random.default_rng(seed)
    ops = spec.operators()
    samples: dict[tuple[str, str], list[np.ndarray]] = {}
    n_states = max(1, math.ceil(n / per_state))
    per_problem_draws = max(1, per_state)
    for k in range(n_states):
        problem = gen_problem(spec, int(rng.integers(0, 2**31 - 1)))
        state = problem.init
        ground = ground_operators(ops, state)
        by_controller: dict[ControllerKind, list[GroundAbstractAction]] = {}
        for ga in ground:
            by_controller.setdefault(ga.controller, []).append(ga)
        for _ in range(per_problem_draws // 3 + 1):
            pos = Vec2(rng.uniform(-9.5, 9.5), rng.uniform(-9.5, 9.5))
            theta = rng.uniform(-math.pi, math.pi)
            randomized = state.with_robot(RobotState(Pose2(pos, theta)))
            for controller, actions in by_controller.items():
                action = actions[rng.integers(len(actions))]
                bounds = controller.param_bounds
                phi = rng.uniform(bounds[:, 0], bounds[:, 1])
                for kind in AuxKind:
                    z = aux_target(kind, controller, randomized, action.bindings, phi)
                    samples.setdefault((controller.value, kind.value), []).append(z)
    tables: dict[str, dict[str, list[float]]] = {}
    for (ctrl, kind), rows in samples.items():
        arr = np.stack(rows)
        rand_rmse = np.sqrt(2.0) * arr.std(axis=0)
        tables.setdefault(ctrl, {})[kind] = np.maximum(rand_rmse, 1e-9).tolist()
    return tables


class MissingRandomGuessTable(RuntimeError):
    pass


class RandTables:
    """Per-(domain, controller, kind) random-guess error vectors."""

    VERSION = 1

    def __init__(self, tables: Optional[dict] = None) -> None:
        self.tables: dict[str, dict[str, dict[str, list[float]]]] = tables or {}

    def add_domain(self, domain: str, per_controller: dict) -> None:
        self.tables[domain] = per_controller

    def lookup(self, domain: str, controller: ControllerKind, kind: AuxKind) -> np.ndarray:
        try:
            return np.asarray(self.tables[domain][controller.value][kind.value])
        except KeyError:
            raise MissingRandomGuessTable(
                f"no random-guess table for ({domain}, {controller.value}, {kind.value})"
            ) from None

    def save(self, path: str | Path) -> None:
        doc = {"version": self.VERSION, "tables": self.tables}
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "RandTables":
        doc = json.loads(Path(path).read_text())
        if doc.get("version") != cls.VERSION:
            raise ValueError("unsupported random-guess table version")
        return cls(doc["tables"])


# ---------------------------------------------------------------------------
# Mixture strategies


class MissingObservationPass(RuntimeError):
    pass


@dataclass(frozen=True)
class GeometricAux:
    pass


@dataclass(frozen=True)
class DistanceOnly:
    pass


@dataclass(frozen=True)
class Reconstruction:
    pass


@dataclass(frozen=True)
class UniformMix:
    pass


COMPONENT_ORDER = ("generic", "specialized", "uniform")


@dataclass(frozen=True)
class Proportional:
    # controller value -> weights over COMPONENT_ORDER
    weights: dict

    def weights_for(self, controller: ControllerKind) -> np.ndarray:
        if controller.value not in self.weights:
            raise MissingObservationPass(f"no observed proportions for {controller.value}")
        return np.asarray(self.weights[controller.value], dtype=np.float64)


@dataclass(frozen=True)
class Classifier:
    # controller value -> (net, input normalizer); outputs logits over COMPONENT_ORDER
    nets: dict

    def weights_for(self, controller: ControllerKind, x: np.ndarray) -> np.ndarray:
        if controller.value not in self.nets:
            raise MissingObservationPass(f"no trained classifier for {controller.value}")
        net, normalizer = self.nets[controller.value]
        _, logits = net.forward(normalizer.normalize(x))
        logits = logits - logits.max()
        p = np.exp(logits)
        return p / p.sum()


RELIABILITY_STRATEGIES = (GeometricAux, DistanceOnly, Reconstruction)

STRATEGY_AUX_KIND = {
    GeometricAux: AuxKind.GEOMETRIC,
    DistanceOnly: AuxKind.DISTANCE,
    Reconstruction: AuxKind.RECONSTRUCTION,
    UniformMix: AuxKind.GEOMETRIC,
    Proportional: AuxKind.GEOMETRIC,
    Classifier: AuxKind.GEOMETRIC,
}


def strategy_weights(
    strategy,
    controller: ControllerKind,
    labels: Sequence[str],
    rhos: Optional[np.ndarray] = None,
    x: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Component weights (sum 1) over the active component labels."""
    if isinstance(strategy, RELIABILITY_STRATEGIES):
        assert rhos is not None
        return mixture_weights(np.asarray(rhos))
    if isinstance(strategy, UniformMix):
        return np.full(len(labels), 1.0 / len(labels))
    if isinstance(strategy, Proportional):
        full = strategy.weights_for(controller)
        sub = np.array([full[COMPONENT_ORDER.index(lbl)] for lbl in labels])
        total = sub.sum()
        if total <= 0.0:
            return np.full(len(labels), 1.0 / len(labels))
        return sub / total
    if isinstance(strategy, Classifier):
        assert x is not None
        full = strategy.weights_for(controller, x)
        sub = np.array([full[COMPONENT_ORDER.index(lbl)] for lbl in labels])
        total = sub.sum()
        if total <= 0.0:
            return np.full(len(labels), 1.0 / len(labels))
        return sub / total
    raise TypeError(f"unknown strategy: {strategy!r}")


# ---------------------------------------------------------------------------
# Sampler bank


class MethodKind(enum.Enum):
    SPECIALIZED = "specialized"
    PER_DOMAIN_GENERIC = "per_domain_generic"
    CROSS_DOMAIN_GENERIC = "cross_domain_generic"
    PER_DOMAIN_MIXTURE = "per_domain_mixture"
    CROSS_DOMAIN_MIXTURE = "cross_domain_mixture"


MIXTURE_METHODS = (MethodKind.PER_DOMAIN_MIXTURE, MethodKind.CROSS_DOMAIN_MIXTURE)


@dataclass
class SampleDraw:
    phi: np.ndarray
    candidates_drawn: int
    component: str
    labels: list[str]
    weights: np.ndarray


class _DrawCache:
    """Single-slot block cache of reverse-chain draws per model."""

    def __init__(self, block: int = DRAW_BLOCK) -> None:
        self.block = block
        self.slots: dict[int, tuple[bytes, list[np.ndarray]]] = {}

    def draw(self, model: DiffusionSampler, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.block <= 1:
            return model.sample_batch(x, rng, 1)[0]
        key = id(model)
        x_bytes = np.asarray(x).tobytes()
        slot = self.slots.get(key)
        if slot is None or slot[0] != x_bytes or not slot[1]:
            batch = model.sample_batch(x, rng, self.block)
            self.slots[key] = (x_bytes, [row for row in batch])
        return self.slots[key][1].pop(0)


@dataclass
class SamplerBank:
    """Per-controller generic + per-signature specialized + uniform samplers."""

    method: MethodKind
    rand_tables: RandTables
    aux_kind: AuxKind = AuxKind.GEOMETRIC
    strategy: object = field(default_factory=GeometricAux)
    specialized: dict = field(default_factory=dict)  # TypeSignature -> DiffusionSampler
    generic_per_domain: dict = field(default_factory=dict)  # (controller value, domain) -> model
    generic_cross: dict = field(default_factory=dict)  # controller value -> model
    draw_block: int = DRAW_BLOCK
    observer: Optional[object] = None

    def __post_init__(self) -> None:
        self._cache = _DrawCache(self.draw_block)

    def generic_for(self, sig: TypeSignature, domain: str) -> Optional[DiffusionSampler]:
        if self.method in (MethodKind.PER_DOMAIN_GENERIC, MethodKind.PER_DOMAIN_MIXTURE):
            return self.generic_per_domain.get((sig.controller.value, domain))
        if self.method in (MethodKind.CROSS_DOMAIN_GENERIC, MethodKind.CROSS_DOMAIN_MIXTURE):
            return self.generic_cross.get(sig.controller.value)
        return None

    def components_for(self, sig: TypeSignature) -> list[tuple[str, Optional[DiffusionSampler]]]:
        """Active (label, model) pairs; uniform is the model-free fallback."""
        domain = domain_of_types(sig.object_types)
        spec_model = self.specialized.get(sig)
        if self.method is MethodKind.SPECIALIZED:
            return [("specialized", spec_model)] if spec_model else [("uniform", None)]
        if self.method in (MethodKind.PER_DOMAIN_GENERIC, MethodKind.CROSS_DOMAIN_GENERIC):
            gen = self.generic_for(sig, domain)
            return [("generic", gen)] if gen else [("uniform", None)]
        comps: list[tuple[str, Optional[DiffusionSampler]]] = []
        gen = self.generic_for(sig, domain)
        if gen is not None:
            comps.append(("generic", gen))
        if spec_model is not None:
            comps.append(("specialized", spec_model))
        comps.append(("uniform", None))
        return comps

    # Planner sampler protocol -------------------------------------------------
    #
    # Budget accounting: one charged sample per draw. Mixture candidates are
    # screened only by the cheap auxiliary geometry; the metered cost is the
    # simulator-grade attempt that the chosen parameter incurs.

    def num_candidates(self, action: GroundAbstractAction) -> int:
        return 1

    def sample(self, state: WorldState, action: GroundAbstractAction, rng: np.random.Generator):
        draw = self.sample_mixture(state, action, rng)
        if self.observer is not None:
            self.observer.on_draw(state, action, draw)
        return draw.phi, 1

    # Mixture ------------------------------------------------------------------

    def sample_mixture(
        self, state: WorldState, action: GroundAbstractAction, rng: np.random.Generator
    ) -> SampleDraw:
        sig = action.signature()
        comps = self.components_for(sig)
        bounds = action.controller.param_bounds
        labels = [label for label, _ in comps]
        candidates: list[np.ndarray] = []
        x = conditioning_vector(state, action) if any(m is not None for _, m in comps) else None
        for label, model in comps:
            if model is None:
                candidates.append(rng.uniform(bounds[:, 0], bounds[:, 1]))
            else:
                candidates.append(self._cache.draw(model, x, rng))
        if len(comps) == 1:
            weights = np.array([1.0])
        else:
            weights = self._candidate_weights(state, action, sig, comps, candidates, x)
        choice = int(rng.choice(len(comps), p=weights))
        return SampleDraw(candidates[choice], len(comps), labels[choice], labels, weights)

    def _candidate_weights(self, state, action, sig, comps, candidates, x) -> np.ndarray:
        labels = [label for label, _ in comps]
        controller = action.controller
        if isinstance(self.strategy, RELIABILITY_STRATEGIES):
            # Never-seen signature inside a mixture: generic + uniform at
            # fixed half weights.
            if self.method in MIXTURE_METHODS and "specialized" not in labels and "generic" in labels:
                return np.array(
                    [FIXED_UNSEEN_WEIGHT if lbl in ("generic", "uniform") else 0.0 for lbl in labels]
                )
            domain = domain_of_types(sig.object_types)
            rand_errors = self.rand_tables.lookup(domain, controller, self.aux_kind)
            rhos = []
            for (label, model), phi in zip(comps, candidates):
                if model is None:
                    rhos.append(1.0)
                else:
                    z = aux_target(self.aux_kind, controller, state, action.bindings, phi)
                    pred = model.predict_aux(x, phi)
                    rhos.append(reliability(pred, z, rand_errors))
            return mixture_weights(np.array(rhos))
        return strategy_weights(self.strategy, controller, labels, x=x)


def uniform_bank(rand_tables: Optional[RandTables] = None, method: MethodKind = MethodKind.PER_DOMAIN_MIXTURE) -> SamplerBank:
    """A bank with only the uniform component active (fresh-lifetime start)."""
    return SamplerBank(method=method, rand_tables=rand_tables or RandTables())


# ---------------------------------------------------------------------------
# Bank persistence

BANK_MANIFEST_VERSION = 1


def save_bank(bank: SamplerBank, directory: str | Path) -> None:
    """Directory of model checkpoints plus a manifest keyed by signature."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for sig in sorted(bank.specialized, key=lambda s: s.key()):
        fname = f"spec__{sig.key()}.ckpt"
        bank.specialized[sig].save(
            directory / fname,
            extra_meta={"controller": sig.controller.value, "signature": list(sig.object_types)},
        )
        entries.append(
            {
                "kind": "specialized",
                "controller": sig.controller.value,
                "object_types": list(sig.object_types),
                "file": fname,
            }
        )
    for (ctrl, domain) in sorted(bank.generic_per_domain):
        fname = f"pd__{ctrl.lower()}__{domain}.ckpt"
        bank.generic_per_domain[(ctrl, domain)].save(
            directory / fname, extra_meta={"controller": ctrl, "domain": domain}
        )
        entries.append(
            {"kind": "generic_per_domain", "controller": ctrl, "domain": domain, "file": fname}
        )
    for ctrl in sorted(bank.generic_cross):
        fname = f"cd__{ctrl.lower()}.ckpt"
        bank.generic_cross[ctrl].save(directory / fname, extra_meta={"controller": ctrl})
        entries.append({"kind": "generic_cross", "controller": ctrl, "file": fname})
    manifest = {
        "version": BANK_MANIFEST_VERSION,
        "method": bank.method.value,
        "aux_kind": bank.aux_kind.value,
        "entries": entries,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))


def load_bank(directory: str | Path, rand_tables: RandTables) -> SamplerBank:
    from .world import ControllerKind

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("version") != BANK_MANIFEST_VERSION:
        raise ValueError("unsupported bank manifest version")
    bank = SamplerBank(
        method=MethodKind(manifest["method"]),
        rand_tables=rand_tables,
        aux_kind=AuxKind(manifest["aux_kind"]),
    )
    for entry in manifest["entries"]:
        model, _ = DiffusionSampler.load(directory / entry["file"])
        if entry["kind"] == "specialized":
            sig = TypeSignature(
                ControllerKind(entry["controller"]), tuple(entry["object_types"])
            )
            bank.specialized[sig] = model
        elif entry["kind"] == "generic_per_domain":
            bank.generic_per_domain[(entry["controller"], entry["domain"])] = model
        else:
            bank.generic_cross[entry["controller"]] = model
    return bank
