"""Experiment drivers: offline multitask, lifelong streams, mixture-strategy
ablations, and replay-vs-retrain comparisons, plus metrics persistence.

All randomness derives from the config seed through named seed channels, so a
rerun with the same config reproduces every metrics table byte for byte.
Evaluation is always recorded before any training touches the same problem.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__, diffusion
from .diffusion import NoiseSchedule
from .domains import (
    DOMAINS,
    MAIN_DOMAIN_NAMES,
    Problem,
    gen_problem,
    gen_viz_dataset,
    viz_conditioning,
    viz_param_bounds,
    viz_records_to_jsonl,
)
from .lifelong import (
    ExperienceStore,
    SchemeKind,
    UpdateScheme,
    bootstrap,
    harvest,
    tag_problem_index,
    update,
)
from .nn import Mlp, Normalizer, TrainConfig, train
from .planner import PlannerConfig, solve
from .samplers import (
    AuxKind,
    Classifier,
    DistanceOnly,
    GeometricAux,
    MethodKind,
    Proportional,
    RandTables,
    Reconstruction,
    SamplerBank,
    UniformMix,
    COMPONENT_ORDER,
    build_random_guess_tables,
    save_bank,
)
from .world import ControllerKind, Invalid, WorldState, conditioning_vector, simulate

METRICS_HEADER = "trial,method,scheme,domain,problem_index,solved,samples_used"

STRATEGY_NAMES = {
    "geometric_aux": GeometricAux,
    "distance_only": DistanceOnly,
    "reconstruction": Reconstruction,
    "uniform_mix": UniformMix,
    "proportional": Proportional,
    "classifier": Classifier,
}

STRATEGY_AUX = {
    "geometric_aux": AuxKind.GEOMETRIC,
    "distance_only": AuxKind.DISTANCE,
    "reconstruction": AuxKind.RECONSTRUCTION,
    "uniform_mix": AuxKind.GEOMETRIC,
    "proportional": AuxKind.GEOMETRIC,
    "classifier": AuxKind.GEOMETRIC,
}

# Seed channels; every derived generator hangs off (seed, channel, ...).
_CH_DEMO, _CH_TEST, _CH_STREAM, _CH_PLAN, _CH_UPDATE, _CH_ORDER, _CH_TABLES = range(7)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "offline"
    methods: tuple[str, ...] = (
        "specialized",
        "per_domain_generic",
        "cross_domain_generic",
        "per_domain_mixture",
        "cross_domain_mixture",
    )
    scheme: str = "replay"
    replay_adapt_epochs: int = 100
    domains: tuple[str, ...] = MAIN_DOMAIN_NAMES
    tasks_per_domain: int = 500
    update_interval: int = 50
    n_train: tuple[int, ...] = (50,)
    m_test: int = 50
    trials: int = 10
    seed: int = 0
    max_skeletons: int = 1
    max_samples_per_step: int = 100
    sample_budget: int = 10_000
    epochs: int = 1000
    batch_size: int = 512
    learning_rate: float = 1e-3
    diffusion_t: int = 100
    beta_start: float = diffusion.DEFAULT_BETA_START
    beta_end: float = diffusion.DEFAULT_BETA_END
    strategies: tuple[str, ...] = tuple(STRATEGY_NAMES)
    rand_table_draws: int = 100_000
    n_jobs: int = 1
    save_models: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("offline", "lifelong", "ablation", "replay_vs_retrain"):
            raise ValueError(f"unknown mode: {self.mode}")
        for m in self.methods:
            MethodKind(m)
        SchemeKind(self.scheme)
        for d in self.domains:
            if d not in DOMAINS:
                raise ValueError(f"unknown domain: {d}")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ValueError(f"unknown strategy: {s}")
        if self.trials < 1 or self.m_test < 0 or self.tasks_per_domain < 1:
            raise ValueError("invalid experiment sizes")

    def planner(self) -> PlannerConfig:
        return PlannerConfig(self.max_skeletons, self.max_samples_per_step, self.sample_budget)

    def train_cfg(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate)

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule.linear(self.diffusion_t, self.beta_start, self.beta_end)

    def update_scheme(self, scheme: Optional[str] = None) -> UpdateScheme:
        return UpdateScheme(SchemeKind(scheme or self.scheme), self.replay_adapt_epochs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        for key in ("methods", "domains", "n_train", "strategies"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class MetricsRecord:
    trial: int
    method: str
    scheme: str
    domain: str
    problem_index: int
    solved: bool
    samples_used: int

    def csv_row(self) -> str:
        return (
            f"{self.trial},{self.method},{self.scheme},{self.domain},"
            f"{self.problem_index},{int(self.solved)},{self.samples_used}"
        )


def _seed_for(cfg_seed: int, channel: int, *parts) -> int:
    ints = [cfg_seed, channel]
    for p in parts:
        ints.append(p if isinstance(p, int) else zlib.crc32(str(p).encode()))
    return int(np.random.SeedSequence(ints).generate_state(1)[0])


def _rng_for(cfg_seed: int, channel: int, *parts) -> np.random.Generator:
    return np.random.default_rng(_seed_for(cfg_seed, channel, *parts))


# ---------------------------------------------------------------------------
# Output files


def write_metrics(rows: Sequence[MetricsRecord], path: Path) -> None:
    lines = [METRICS_HEADER] + [r.csv_row() for r in rows]
    path.write_text("\n".join(lines) + "\n")


def read_metrics(path: Path) -> list[MetricsRecord]:
    lines = path.read_text().strip().split("\n")
    assert lines[0] == METRICS_HEADER
    out = []
    for line in lines[1:]:
        trial, method, scheme, domain, idx, solved, samples = line.split(",")
        out.append(
            MetricsRecord(int(trial), method, scheme, domain, int(idx), solved == "1", int(samples))
        )
    return out


def aggregate(rows: Sequence[MetricsRecord]) -> dict:
    """Per method+scheme: mean cumulative curve over trials and samples-per-solved."""
    out: dict = {}
    keys = sorted({(r.method, r.scheme) for r in rows})
    for method, scheme in keys:
        subset = [r for r in rows if r.method == method and r.scheme == scheme]
        trials = sorted({r.trial for r in subset})
        per_index: dict[int, list[tuple[int, int]]] = {}
        for trial in trials:
            seq = sorted((r for r in subset if r.trial == trial), key=lambda r: r.problem_index)
            cum_s, cum_v = 0, 0
            for pos, r in enumerate(seq):
                cum_s += r.samples_used
                cum_v += int(r.solved)
                per_index.setdefault(pos, []).append((cum_s, cum_v))
        curve = [
            [float(np.mean([s for s, _ in per_index[pos]])), float(np.mean([v for _, v in per_index[pos]]))]
            for pos in sorted(per_index)
        ]
        total_solved = sum(int(r.solved) for r in subset)
        total_samples = sum(r.samples_used for r in subset)
        label = method if scheme == "none" else f"{method}+{scheme}"
        out[label] = {
            "cumulative_curve": curve,
            "samples_per_solved": (total_samples / total_solved) if total_solved else float("inf"),
            "problems_solved": total_solved,
            "problems_total": len(subset),
        }
    return out


def write_manifest(cfg: ExperimentConfig, out_dir: Path, outputs: list[str]) -> None:
    manifest = {
        "config": cfg.to_dict(),
        "code_version": __version__,
        "seeds": [cfg.seed + 0, *(range(cfg.trials))],
        "outputs": outputs,
        "created_unix": int(time.time()),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=1))


def ensure_tables(cfg: ExperimentConfig, out_dir: Path) -> RandTables:
    path = out_dir / "tables.json"
    if path.exists():
        return RandTables.load(path)
    tables = RandTables()
    for domain in cfg.domains:
        tables.add_domain(
            domain,
            build_random_guess_tables(
                DOMAINS[domain],
                n=cfg.rand_table_draws,
                seed=_seed_for(cfg.seed, _CH_TABLES, domain),
            ),
        )
    tables.save(path)
    return tables


# ---------------------------------------------------------------------------
# Shared pieces


def _gen_demo_records(cfg: ExperimentConfig, tables: RandTables, trial: int, n_max: int):
    """Plan demo tasks with the uniform-only bank; harvested records per task."""
    per_domain: dict[str, list[list]] = {}
    planner_cfg = cfg.planner()
    for domain in cfg.domains:
        spec = DOMAINS[domain]
        task_records: list[list] = []
        for i in range(n_max):
            problem = gen_problem(spec, _seed_for(cfg.seed, _CH_DEMO, trial, domain, i))
            bank = bootstrap(MethodKind.PER_DOMAIN_MIXTURE, tables)
            rng = _rng_for(cfg.seed, _CH_PLAN, trial, domain, "demo", i)
            result = solve(problem, bank, planner_cfg, rng)
            task_records.append(tag_problem_index(harvest(result, problem), i))
        per_domain[domain] = task_records
    return per_domain


def _fit_models(cfg, records, aux_kind: AuxKind, trial: int, tag: str):
    """Train specialized, per-domain generic, and cross-domain generic models."""
    from .lifelong import _records_to_arrays, _child_seed
    from .domains import domain_of_types

    by_sig: dict = {}
    for sig, rec in records:
        by_sig.setdefault(sig, []).append(rec)
    schedule = cfg.schedule()
    train_cfg = cfg.train_cfg()
    base_seed = _seed_for(cfg.seed, _CH_UPDATE, trial, tag, aux_kind.value)

    def fit_records(recs, controller, scope):
        x, phi, z = _records_to_arrays(recs, controller, aux_kind)
        return diffusion.fit(
            x,
            phi,
            controller.param_bounds,
            train_cfg,
            seed=_child_seed(base_seed, scope),
            data_z=z,
            schedule=schedule,
        )

    specialized = {}
    for sig in sorted(by_sig, key=lambda s: s.key()):
        specialized[sig] = fit_records(by_sig[sig], sig.controller, f"spec:{sig.key()}")
    generic_pd = {}
    scopes = sorted(
        {(sig.controller, domain_of_types(sig.object_types)) for sig in by_sig},
        key=lambda cd: (cd[0].value, cd[1]),
    )
    for controller, domain in scopes:
        recs = [
            r
            for sig, rl in by_sig.items()
            if sig.controller is controller and domain_of_types(sig.object_types) == domain
            for r in rl
        ]
        generic_pd[(controller.value, domain)] = fit_records(recs, controller, f"pd:{controller.value}:{domain}")
    generic_cd = {}
    for controller in sorted({sig.controller for sig in by_sig}, key=lambda c: c.value):
        recs = [r for sig, rl in by_sig.items() if sig.controller is controller for r in rl]
        generic_cd[controller.value] = fit_records(recs, controller, f"cd:{controller.value}")
    return specialized, generic_pd, generic_cd


def _bank_for_method(cfg, tables, method: MethodKind, models, strategy=None, aux_kind=AuxKind.GEOMETRIC):
    specialized, generic_pd, generic_cd = models
    bank = SamplerBank(
        method=method,
        rand_tables=tables,
        aux_kind=aux_kind,
        specialized=dict(specialized),
        generic_per_domain=dict(generic_pd),
        generic_cross=dict(generic_cd),
    )
    if strategy is not None:
        bank.strategy = strategy
    return bank


def _evaluate_bank(cfg, bank, trial: int, method_label: str, scheme_label: str, simulate_fn=simulate):
    rows = []
    planner_cfg = cfg.planner()
    index = 0
    for domain in cfg.domains:
        spec = DOMAINS[domain]
        for i in range(cfg.m_test):
            problem = gen_problem(spec, _seed_for(cfg.seed, _CH_TEST, trial, domain, i))
            rng = _rng_for(cfg.seed, _CH_PLAN, trial, domain, "test", i)
            result = solve(problem, bank, planner_cfg, rng, simulate_fn=simulate_fn)
            rows.append(
                MetricsRecord(
                    trial, method_label, scheme_label, domain, index, result.solved, result.samples_used
                )
            )
            index += 1
    return rows


# ---------------------------------------------------------------------------
# Offline experiment


def _offline_trial(cfg: ExperimentConfig, tables: RandTables, trial: int):
    n_max = max(cfg.n_train)
    demos = _gen_demo_records(cfg, tables, trial, n_max)
    rows_by_n: dict[int, list[MetricsRecord]] = {}
    for n in cfg.n_train:
        records = [item for domain in cfg.domains for task in demos[domain][:n] for item in task]
        models = _fit_models(cfg, records, AuxKind.GEOMETRIC, trial, f"offline:{n}")
        for method_name in cfg.methods:
            bank = _bank_for_method(cfg, tables, MethodKind(method_name), models)
            rows_by_n.setdefault(n, []).extend(
                _evaluate_bank(cfg, bank, trial, method_name, "none")
            )
    return rows_by_n


def run_offline(cfg: ExperimentConfig, out_dir: str | Path) -> dict[int, list[MetricsRecord]]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [f"metrics_n{n}.csv" for n in cfg.n_train]
    write_manifest(cfg, out_dir, outputs)
    tables = ensure_tables(cfg, out_dir)
    per_trial = _run_parallel(cfg, [(_offline_trial, (cfg, tables, t)) for t in range(cfg.trials)])
    merged: dict[int, list[MetricsRecord]] = {n: [] for n in cfg.n_train}
    for result in per_trial:
        for n, rows in result.items():
            merged[n].extend(rows)
    for n, rows in merged.items():
        write_metrics(rows, out_dir / f"metrics_n{n}.csv")
        (out_dir / f"aggregates_n{n}.json").write_text(
            json.dumps(aggregate(rows), sort_keys=True, indent=1)
        )
    return merged


# ---------------------------------------------------------------------------
# Lifelong experiment


def _lifelong_trial(
    cfg: ExperimentConfig,
    tables: RandTables,
    trial: int,
    method_name: str,
    scheme_name: str,
    probe: Optional[Callable] = None,
):
    method = MethodKind(method_name)
    scheme = cfg.update_scheme(scheme_name)
    bank = bootstrap(method, tables)
    store = ExperienceStore()
    pending: list = []
    rows: list[MetricsRecord] = []
    planner_cfg = cfg.planner()
    train_cfg = cfg.train_cfg()
    schedule = cfg.schedule()
    order = list(cfg.domains)
    _rng_for(cfg.seed, _CH_ORDER, trial).shuffle(order)
    index = 0
    for domain in order:
        spec = DOMAINS[domain]
        for k in range(cfg.tasks_per_domain):
            problem = gen_problem(spec, _seed_for(cfg.seed, _CH_STREAM, trial, domain, k))
            rng = _rng_for(cfg.seed, _CH_PLAN, trial, domain, "stream", k)
            result = solve(problem, bank, planner_cfg, rng)
            rows.append(
                MetricsRecord(
                    trial, method_name, scheme_name, domain, index, result.solved, result.samples_used
                )
            )
            pending.extend(tag_problem_index(harvest(result, problem), index))
            index += 1
            if index % cfg.update_interval == 0:
                update(
                    bank,
                    store,
                    pending,
                    scheme,
                    _seed_for(cfg.seed, _CH_UPDATE, trial, method_name, scheme_name, index),
                    train_cfg,
                    schedule,
                )
                pending = []
            if probe is not None:
                probe(index, bank, store)
    return rows, bank, store


def _lifelong_job(cfg, tables, trial, method_name, scheme_name):
    rows, _, _ = _lifelong_trial(cfg, tables, trial, method_name, scheme_name)
    return rows


def run_lifelong(cfg: ExperimentConfig, out_dir: str | Path, schemes: Optional[Sequence[str]] = None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, out_dir, ["metrics.csv", "aggregates.json"])
    tables = ensure_tables(cfg, out_dir)
    schemes = list(schemes or [cfg.scheme])
    jobs = [
        (_lifelong_job, (cfg, tables, trial, method, scheme))
        for trial in range(cfg.trials)
        for method in cfg.methods
        for scheme in schemes
    ]
    results = _run_parallel(cfg, jobs)
    rows = [r for result in results for r in result]
    rows.sort(key=lambda r: (r.trial, r.method, r.scheme, r.problem_index))
    write_metrics(rows, out_dir / "metrics.csv")
    (out_dir / "aggregates.json").write_text(json.dumps(aggregate(rows), sort_keys=True, indent=1))
    if cfg.save_models:
        for trial in range(cfg.trials):
            for method in cfg.methods:
                for scheme in schemes:
                    _, bank, store = _lifelong_trial(cfg, tables, trial, method, scheme)
                    tag = f"trial{trial}_{method}_{scheme}"
                    save_bank(bank, out_dir / "checkpoints" / tag)
                    store.save(out_dir / "experience" / tag)
    return rows


def run_replay_vs_retrain(cfg: ExperimentConfig, out_dir: str | Path):
    return run_lifelong(cfg, out_dir, schemes=["replay", "retrain"])


# ---------------------------------------------------------------------------
# Ablation experiment


class DrawRecorder:
    """Pairs each mixture draw with the outcome of its simulation."""

    def __init__(self) -> None:
        self.events: list[tuple[str, np.ndarray, str, bool]] = []
        self._pending: Optional[tuple[str, np.ndarray, str]] = None

    def on_draw(self, state, action, draw) -> None:
        x = conditioning_vector(state, action)
        self._pending = (action.controller.value, x, draw.component)

    def simulate_fn(self, state, action, phi):
        out = simulate(state, action, phi)
        if self._pending is not None:
            ctrl, x, component = self._pending
            self.events.append((ctrl, x, component, isinstance(out, WorldState)))
            self._pending = None
        return out


def proportional_from_events(events) -> Proportional:
    weights: dict[str, list[float]] = {}
    for controller in ControllerKind:
        ctrl_events = [e for e in events if e[0] == controller.value and e[3]]
        counts = np.array(
            [sum(1 for e in ctrl_events if e[2] == label) for label in COMPONENT_ORDER],
            dtype=np.float64,
        )
        total = counts.sum()
        weights[controller.value] = (counts / total).tolist() if total > 0 else [1 / 3] * 3
    return Proportional(weights)


def make_ce_loss():
    def loss_fn(net, batch, rng):
        x, onehot = batch
        _, logits, cache = net.forward_batch_cached(x)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        p = expd / expd.sum(axis=1, keepdims=True)
        n = len(x)
        loss = float(-np.mean(np.log(np.maximum((p * onehot).sum(axis=1), 1e-12))))
        grads = net.backward(cache, None, (p - onehot) / n)
        return loss, grads

    return loss_fn


def classifier_from_events(events, cfg: ExperimentConfig, trial: int) -> Classifier:
    """Per-controller nets mapping state features to component weights."""
    nets: dict[str, tuple[Mlp, Normalizer]] = {}
    for controller in ControllerKind:
        ctrl_events = [e for e in events if e[0] == controller.value and e[3]]
        d_in = len(ctrl_events[0][1]) if ctrl_events else 4
        net = Mlp(d_in, 0, len(COMPONENT_ORDER), seed=_seed_for(cfg.seed, _CH_UPDATE, trial, "clf", controller.value))
        if len(ctrl_events) >= 5:
            x = np.stack([e[1] for e in ctrl_events])
            onehot = np.zeros((len(ctrl_events), len(COMPONENT_ORDER)))
            for i, e in enumerate(ctrl_events):
                onehot[i, COMPONENT_ORDER.index(e[2])] = 1.0
            normalizer = Normalizer.fit(x)
            train(
                net,
                (normalizer.normalize(x), onehot),
                make_ce_loss(),
                cfg.train_cfg(),
                seed=_seed_for(cfg.seed, _CH_UPDATE, trial, "clf_train", controller.value),
                epochs=min(cfg.epochs, 300),
            )
        else:
            # Too little signal: zero the heads so the classifier is uniform.
            for key in ("Wa", "ba"):
                net.params[key][:] = 0.0
            normalizer = Normalizer.identity(d_in)
        nets[controller.value] = (net, normalizer)
    return Classifier(nets)


def _ablation_trial(cfg: ExperimentConfig, tables: RandTables, trial: int):
    n = min(cfg.n_train)
    demos = _gen_demo_records(cfg, tables, trial, n)
    records = [item for domain in cfg.domains for task in demos[domain][:n] for item in task]
    models_by_aux = {}
    needed = {STRATEGY_AUX[s] for s in cfg.strategies}
    for aux_kind in sorted(needed, key=lambda k: k.value):
        models_by_aux[aux_kind] = _fit_models(cfg, records, aux_kind, trial, f"ablation:{n}")
    rows: list[MetricsRecord] = []
    observed_events = None
    ordered = sorted(cfg.strategies, key=lambda s: (s not in ("uniform_mix",), s))
    for name in ordered:
        aux_kind = STRATEGY_AUX[name]
        models = models_by_aux[aux_kind]
        simulate_fn = simulate
        if name == "uniform_mix":
            recorder = DrawRecorder()
            bank = _bank_for_method(
                cfg, tables, MethodKind.PER_DOMAIN_MIXTURE, models, UniformMix(), aux_kind
            )
            bank.observer = recorder
            simulate_fn = recorder.simulate_fn
        elif name in ("proportional", "classifier"):
            if observed_events is None:
                raise RuntimeError("observation pass missing before proportional/classifier")
            strategy = (
                proportional_from_events(observed_events)
                if name == "proportional"
                else classifier_from_events(observed_events, cfg, trial)
            )
            bank = _bank_for_method(
                cfg, tables, MethodKind.PER_DOMAIN_MIXTURE, models, strategy, aux_kind
            )
        else:
            strategy = {"geometric_aux": GeometricAux, "distance_only": DistanceOnly, "reconstruction": Reconstruction}[name]()
            bank = _bank_for_method(
                cfg, tables, MethodKind.PER_DOMAIN_MIXTURE, models, strategy, aux_kind
            )
        rows.extend(_evaluate_bank(cfg, bank, trial, name, "none", simulate_fn=simulate_fn))
        if name == "uniform_mix":
            observed_events = recorder.events
    return rows


def run_ablation(cfg: ExperimentConfig, out_dir: str | Path):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, out_dir, ["metrics.csv", "aggregates.json"])
    tables = ensure_tables(cfg, out_dir)
    results = _run_parallel(cfg, [(_ablation_trial, (cfg, tables, t)) for t in range(cfg.trials)])
    rows = [r for result in results for r in result]
    rows.sort(key=lambda r: (r.trial, r.method, r.problem_index))
    write_metrics(rows, out_dir / "metrics.csv")
    (out_dir / "aggregates.json").write_text(json.dumps(aggregate(rows), sort_keys=True, indent=1))
    return rows


# ---------------------------------------------------------------------------
# Visualization dumps


def dump_viz(kind: str, horizon: str, model, n: int, out_dir: str | Path, dataset=None, seed: int = 0):
    """Observed dataset points and learned samples as JSONL for plotting."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{kind.lower()}_{horizon.lower()}"
    if dataset is None:
        dataset = gen_viz_dataset(kind, horizon, n, seed)
    (out_dir / f"observed_{tag}.jsonl").write_text(viz_records_to_jsonl(dataset))
    rng = np.random.default_rng(_seed_for(seed, _CH_TEST, kind, horizon))
    fresh = gen_viz_dataset(kind, "OneStep", max(1, n // 50), seed + 1)
    learned = []
    for i in range(n):
        state, _ = fresh[i % len(fresh)]
        phi = model.sample(viz_conditioning(kind, state), rng)
        learned.append((state, phi))
    (out_dir / f"learned_{tag}.jsonl").write_text(viz_records_to_jsonl(learned))
    return out_dir


def train_viz_model(kind: str, horizon: str, cfg: ExperimentConfig, n_data: int = 2000, seed: int = 0):
    dataset = gen_viz_dataset(kind, horizon, n_data, seed)
    x = np.stack([viz_conditioning(kind, s) for s, _ in dataset])
    phi = np.stack([p for _, p in dataset])
    model = diffusion.fit(
        x,
        phi,
        viz_param_bounds(kind),
        cfg.train_cfg(),
        seed=_seed_for(cfg.seed, _CH_UPDATE, kind, horizon),
        schedule=cfg.schedule(),
    )
    return model, dataset


# ---------------------------------------------------------------------------
# Parallel helper


def _call(job):
    fn, args = job
    return fn(*args)


def _run_parallel(cfg: ExperimentConfig, jobs: list):
    if cfg.n_jobs <= 1 or len(jobs) <= 1:
        return [_call(job) for job in jobs]
    with multiprocessing.get_context("fork").Pool(min(cfg.n_jobs, len(jobs))) as pool:
        return pool.map(_call, jobs)
