"""Experience accumulation and continual sampler training.

Successful plans are harvested into per-(controller, type signature) record
partitions. Updates train only the models whose partitions received new data:
finetuning continues on new records alone, retraining refits from scratch on
everything, and replay adapts briefly on batches balanced between new and old.
"""

from __future__ import annotations

import enum
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import diffusion
from .diffusion import DiffusionSampler, NoiseSchedule
from .domains import Problem, domain_of_types
from .nn import TrainConfig, train, train_balanced
from .planner import PlanResult
from .samplers import (
    AuxKind,
    MethodKind,
    RandTables,
    SamplerBank,
    aux_signals,
    aux_target_from_record,
    uniform_bank,
)
from .world import Invalid, TypeSignature, WorldState, conditioning_vector, simulate

REPLAY_ADAPT_EPOCHS = 100


class SchemeKind(enum.Enum):
    FINETUNE = "finetune"
    RETRAIN = "retrain"
    REPLAY = "replay"


@dataclass(frozen=True)
class UpdateScheme:
    kind: SchemeKind
    adapt_epochs: int = REPLAY_ADAPT_EPOCHS


@dataclass(frozen=True)
class Record:
    x: np.ndarray
    phi: np.ndarray
    z: np.ndarray
    problem_index: int


class ExperienceStore:
    """Append-only records partitioned by type signature."""

    def __init__(self) -> None:
        self.partitions: dict[TypeSignature, list[Record]] = {}

    def extend(self, items: list[tuple[TypeSignature, Record]]) -> None:
        for sig, rec in items:
            self.partitions.setdefault(sig, []).append(rec)

    def records(self, sig: TypeSignature) -> list[Record]:
        return self.partitions.get(sig, [])

    def for_controller(self, controller, domain: Optional[str] = None) -> list[Record]:
        out: list[Record] = []
        for sig in sorted(self.partitions, key=lambda s: s.key()):
            if sig.controller is not controller:
                continue
            if domain is not None and domain_of_types(sig.object_types) != domain:
                continue
            out.extend(self.partitions[sig])
        return out

    def total(self) -> int:
        return sum(len(v) for v in self.partitions.values())

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {"version": 1, "partitions": []}
        for sig in sorted(self.partitions, key=lambda s: s.key()):
            recs = self.partitions[sig]
            fname = f"{sig.key()}.jsonl"
            with open(directory / fname, "w") as fh:
                for rec in recs:
                    fh.write(
                        json.dumps(
                            {
                                "x": rec.x.tolist(),
                                "phi": rec.phi.tolist(),
                                "z": rec.z.tolist(),
                                "problem_index": rec.problem_index,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
            manifest["partitions"].append(
                {
                    "file": fname,
                    "controller": sig.controller.value,
                    "object_types": list(sig.object_types),
                    "count": len(recs),
                    "x_dim": len(recs[0].x),
                    "phi_dim": len(recs[0].phi),
                    "z_dim": len(recs[0].z),
                }
            )
        (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "ExperienceStore":
        from .world import ControllerKind

        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        store = cls()
        for part in manifest["partitions"]:
            sig = TypeSignature(ControllerKind(part["controller"]), tuple(part["object_types"]))
            recs = []
            with open(directory / part["file"]) as fh:
                for line in fh:
                    row = json.loads(line)
                    recs.append(
                        Record(
                            np.array(row["x"]),
                            np.array(row["phi"]),
                            np.array(row["z"]),
                            row["problem_index"],
                        )
                    )
            store.partitions[sig] = recs
        return store


def harvest(result: PlanResult, problem: Problem) -> list[tuple[TypeSignature, Record]]:
    """One record per plan step of a solved problem; failures contribute nothing."""
    if not result.solved or result.skeleton is None or len(result.skeleton.steps) == 0:
        return []
    out: list[tuple[TypeSignature, Record]] = []
    state: WorldState = problem.init
    for action, phi in zip(result.skeleton.steps, result.params):
        x = conditioning_vector(state, action)
        z = aux_signals(action.controller, state, action.bindings, phi)
        out.append((action.signature(), Record(x, np.asarray(phi, dtype=np.float64), z, -1)))
        nxt = simulate(state, action, phi)
        if isinstance(nxt, Invalid):
            raise RuntimeError("solved plan failed to replay during harvest")
        state = nxt
    return out


def tag_problem_index(items: list[tuple[TypeSignature, Record]], index: int) -> list[tuple[TypeSignature, Record]]:
    return [(sig, Record(r.x, r.phi, r.z, index)) for sig, r in items]


def bootstrap(
    method: MethodKind,
    rand_tables: Optional[RandTables] = None,
    strategy=None,
    aux_kind: AuxKind = AuxKind.GEOMETRIC,
) -> SamplerBank:
    """Fresh-lifetime bank: every controller starts with only the uniform sampler."""
    bank = uniform_bank(rand_tables, method)
    bank.aux_kind = aux_kind
    if strategy is not None:
        bank.strategy = strategy
    return bank


def _child_seed(seed: int, scope: str) -> int:
    return int(np.random.SeedSequence([seed, zlib.crc32(scope.encode())]).generate_state(1)[0])


def _records_to_arrays(records: list[Record], controller, aux_kind: AuxKind):
    x = np.stack([r.x for r in records])
    phi = np.stack([r.phi for r in records])
    z = np.stack([aux_target_from_record(aux_kind, controller, r.x, r.z) for r in records])
    return x, phi, z


def _train_scope_model(
    existing: Optional[DiffusionSampler],
    controller,
    new_records: list[Record],
    old_records: list[Record],
    scheme: UpdateScheme,
    cfg: TrainConfig,
    seed: int,
    aux_kind: AuxKind,
    schedule: Optional[NoiseSchedule],
) -> DiffusionSampler:
    bounds = controller.param_bounds
    if existing is None or scheme.kind is SchemeKind.RETRAIN:
        records = old_records + new_records if scheme.kind is SchemeKind.RETRAIN else (
            old_records + new_records if existing is None else new_records
        )
        x, phi, z = _records_to_arrays(records, controller, aux_kind)
        return diffusion.fit(x, phi, bounds, cfg, seed=seed, data_z=z, schedule=schedule)
    if scheme.kind is SchemeKind.FINETUNE:
        x, phi, z = _records_to_arrays(new_records, controller, aux_kind)
        batch = (
            existing.phi_normalizer.normalize(phi),
            existing.cond_normalizer.normalize(x),
            existing.aux_normalizer.normalize(z),
        )
        train(existing.net, batch, diffusion.make_joint_loss(existing.schedule), cfg, seed=seed)
        return existing
    # Replay: brief adaptation on balanced new/old batches.
    xn, pn, zn = _records_to_arrays(new_records, controller, aux_kind)
    xo, po, zo = _records_to_arrays(old_records, controller, aux_kind)
    new_batch = (
        existing.phi_normalizer.normalize(pn),
        existing.cond_normalizer.normalize(xn),
        existing.aux_normalizer.normalize(zn),
    )
    old_batch = (
        existing.phi_normalizer.normalize(po),
        existing.cond_normalizer.normalize(xo),
        existing.aux_normalizer.normalize(zo),
    )
    train_balanced(
        existing.net,
        new_batch,
        old_batch,
        diffusion.make_joint_loss(existing.schedule),
        cfg,
        seed=seed,
        epochs=scheme.adapt_epochs,
    )
    return existing


def update(
    bank: SamplerBank,
    store: ExperienceStore,
    new: list[tuple[TypeSignature, Record]],
    scheme: UpdateScheme,
    seed: int,
    cfg: TrainConfig,
    schedule: Optional[NoiseSchedule] = None,
) -> SamplerBank:
    """Train the affected models on the scheme's data mix, then absorb new data.

    Specialized models see only their signature's records; per-domain generics
    pool a controller within one domain; cross-domain generics pool across
    domains. Models whose partitions received nothing are untouched.
    """
    by_sig: dict[TypeSignature, list[Record]] = {}
    for sig, rec in new:
        by_sig.setdefault(sig, []).append(rec)
    if not by_sig:
        store.extend(new)
        return bank

    method = bank.method
    uses_specialized = method in (
        MethodKind.SPECIALIZED,
        MethodKind.PER_DOMAIN_MIXTURE,
        MethodKind.CROSS_DOMAIN_MIXTURE,
    )
    uses_pd_generic = method in (MethodKind.PER_DOMAIN_GENERIC, MethodKind.PER_DOMAIN_MIXTURE)
    uses_cd_generic = method in (MethodKind.CROSS_DOMAIN_GENERIC, MethodKind.CROSS_DOMAIN_MIXTURE)

    if uses_specialized:
        for sig in sorted(by_sig, key=lambda s: s.key()):
            scope = f"spec:{sig.key()}"
            bank.specialized[sig] = _train_scope_model(
                bank.specialized.get(sig),
                sig.controller,
                by_sig[sig],
                store.records(sig),
                scheme,
                cfg,
                _child_seed(seed, scope),
                bank.aux_kind,
                schedule,
            )
    if uses_pd_generic:
        scopes = sorted(
            {(sig.controller, domain_of_types(sig.object_types)) for sig in by_sig},
            key=lambda cd: (cd[0].value, cd[1]),
        )
        for controller, domain in scopes:
            new_recs = [
                r
                for sig, recs in by_sig.items()
                if sig.controller is controller and domain_of_types(sig.object_types) == domain
                for r in recs
            ]
            key = (controller.value, domain)
            bank.generic_per_domain[key] = _train_scope_model(
                bank.generic_per_domain.get(key),
                controller,
                new_recs,
                store.for_controller(controller, domain),
                scheme,
                cfg,
                _child_seed(seed, f"pd:{controller.value}:{domain}"),
                bank.aux_kind,
                schedule,
            )
    if uses_cd_generic:
        controllers = sorted({sig.controller for sig in by_sig}, key=lambda c: c.value)
        for controller in controllers:
            new_recs = [
                r for sig, recs in by_sig.items() if sig.controller is controller for r in recs
            ]
            bank.generic_cross[controller.value] = _train_scope_model(
                bank.generic_cross.get(controller.value),
                controller,
                new_recs,
                store.for_controller(controller),
                scheme,
                cfg,
                _child_seed(seed, f"cd:{controller.value}"),
                bank.aux_kind,
                schedule,
            )
    store.extend(new)
    return bank
