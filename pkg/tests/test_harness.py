import json
from pathlib import Path

import numpy as np
import pytest

from tamp2d.domains import DOMAINS, gen_problem
from tamp2d.harness import (
    DrawRecorder,
    ExperimentConfig,
    MetricsRecord,
    METRICS_HEADER,
    _lifelong_trial,
    aggregate,
    classifier_from_events,
    dump_viz,
    ensure_tables,
    make_ce_loss,
    proportional_from_events,
    read_metrics,
    run_ablation,
    run_lifelong,
    run_offline,
    run_replay_vs_retrain,
    train_viz_model,
    write_metrics,
    _seed_for,
    _CH_STREAM,
)
from tamp2d.lifelong import ExperienceStore, Record
from tamp2d.nn import Mlp, Normalizer, TrainConfig, train
from tamp2d.planner import PlannerConfig, solve
from tamp2d.samplers import COMPONENT_ORDER, MethodKind
from tamp2d.world import ControllerKind, TypeSignature


def tiny_offline_cfg(**kw):
    base = dict(
        mode="offline",
        methods=("specialized", "per_domain_mixture"),
        domains=("Books",),
        n_train=(3,),
        m_test=2,
        trials=1,
        sample_budget=800,
        epochs=25,
        rand_table_draws=1500,
        seed=5,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def tiny_lifelong_cfg(**kw):
    base = dict(
        mode="lifelong",
        methods=("per_domain_mixture",),
        domains=("Books",),
        tasks_per_domain=6,
        update_interval=3,
        trials=1,
        sample_budget=800,
        epochs=25,
        replay_adapt_epochs=10,
        rand_table_draws=1500,
        scheme="replay",
        seed=7,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(mode="bogus")
    with pytest.raises(ValueError):
        ExperimentConfig(domains=("Atlantis",))
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("quantum",))
    round_tripped = ExperimentConfig.from_dict(tiny_offline_cfg().to_dict())
    assert round_tripped == tiny_offline_cfg()


def test_metrics_csv_round_trip(tmp_path):
    rows = [
        MetricsRecord(0, "specialized", "none", "Books", 0, True, 42),
        MetricsRecord(0, "specialized", "none", "Books", 1, False, 800),
    ]
    path = tmp_path / "metrics.csv"
    write_metrics(rows, path)
    text = path.read_text()
    assert text.startswith(METRICS_HEADER + "\n")
    assert read_metrics(path) == rows


def test_offline_run_writes_outputs_and_is_deterministic(tmp_path):
    cfg = tiny_offline_cfg()
    rows_a = run_offline(cfg, tmp_path / "a")
    rows_b = run_offline(cfg, tmp_path / "b")
    csv_a = (tmp_path / "a" / "metrics_n3.csv").read_bytes()
    csv_b = (tmp_path / "b" / "metrics_n3.csv").read_bytes()
    assert csv_a == csv_b
    for name in ("manifest.json", "config.json", "tables.json", "aggregates_n3.json"):
        assert (tmp_path / "a" / name).exists()
    agg = json.loads((tmp_path / "a" / "aggregates_n3.json").read_text())
    for label, entry in agg.items():
        curve = entry["cumulative_curve"]
        xs = [p[0] for p in curve]
        ys = [p[1] for p in curve]
        assert xs == sorted(xs)
        assert ys == sorted(ys)


def test_lifelong_stream_never_repeats_and_metrics_precede_training(tmp_path):
    cfg = tiny_lifelong_cfg(tasks_per_domain=8, update_interval=4)
    tables = ensure_tables(cfg, tmp_path)
    fingerprints = {}

    def probe(index, bank, store):
        total = 0.0
        for model in list(bank.specialized.values()) + list(bank.generic_per_domain.values()):
            total += float(sum(p.sum() for p in model.net.params.values()))
        fingerprints[index] = total

    rows, bank, store = _lifelong_trial(cfg, tables, 0, "per_domain_mixture", "replay", probe=probe)
    # Unique problems along the stream.
    seeds = [_seed_for(cfg.seed, _CH_STREAM, 0, "Books", k) for k in range(8)]
    assert len(set(seeds)) == 8
    assert [r.problem_index for r in rows] == list(range(8))
    # Models change only at update boundaries.
    for idx in range(1, 9):
        if idx % 4 != 0:
            assert fingerprints[idx] == fingerprints.get(idx - 1, fingerprints[idx]), idx


def test_budget_conservation_counts_every_draw():
    cfg = tiny_lifelong_cfg()
    from tamp2d.samplers import RandTables
    from tamp2d.lifelong import bootstrap

    tables = RandTables()
    for domain in DOMAINS:
        tables.add_domain(
            domain,
            {
                "NavigateTo": {"geometric": [1.0] * 8},
                "Pick": {"geometric": [1.0] * 4},
                "Place": {"geometric": [1.0] * 4},
            },
        )
    bank = bootstrap(MethodKind.PER_DOMAIN_MIXTURE, tables)

    class Counter:
        def __init__(self):
            self.draws = 0

        def on_draw(self, state, action, draw):
            self.draws += 1

    counter = Counter()
    bank.observer = counter
    problem = gen_problem(DOMAINS["Books"], 3)
    result = solve(problem, bank, PlannerConfig(sample_budget=500), np.random.default_rng(0))
    assert result.samples_used == counter.draws
    assert result.samples_used <= 500


def test_replay_vs_retrain_streams_identical(tmp_path):
    cfg = tiny_lifelong_cfg(mode="replay_vs_retrain", tasks_per_domain=4, update_interval=2)
    rows = run_replay_vs_retrain(cfg, tmp_path / "rr")
    replay = sorted(
        ((r.domain, r.problem_index) for r in rows if r.scheme == "replay"),
    )
    retrain = sorted(
        ((r.domain, r.problem_index) for r in rows if r.scheme == "retrain"),
    )
    assert replay == retrain
    assert len(replay) == 4


def test_cross_domain_pool_strictly_larger():
    store = ExperienceStore()
    nav = ControllerKind.NAVIGATE_TO
    sig_book = TypeSignature(nav, ("book",))
    sig_cup = TypeSignature(nav, ("cup",))
    rec = lambda: Record(np.zeros(14), np.zeros(2), np.zeros(8), 0)
    store.extend([(sig_book, rec()) for _ in range(5)])
    store.extend([(sig_cup, rec()) for _ in range(3)])
    assert len(store.for_controller(nav)) == 8
    assert len(store.for_controller(nav, "Books")) == 5
    assert len(store.for_controller(nav, "Cups")) == 3


def test_ablation_tiny_run_covers_all_strategies(tmp_path):
    cfg = tiny_offline_cfg(
        mode="ablation",
        strategies=("uniform_mix", "geometric_aux", "proportional", "classifier"),
        m_test=2,
        n_train=(2,),
    )
    rows = run_ablation(cfg, tmp_path / "ab")
    methods = {r.method for r in rows}
    assert methods == {"uniform_mix", "geometric_aux", "proportional", "classifier"}
    table = read_metrics(tmp_path / "ab" / "metrics.csv")
    assert len(table) == len(rows)


def test_proportional_weights_from_events():
    events = (
        [("NavigateTo", np.zeros(2), "generic", True)] * 10
        + [("NavigateTo", np.zeros(2), "uniform", True)] * 30
        + [("NavigateTo", np.zeros(2), "specialized", False)] * 99
    )
    prop = proportional_from_events(events)
    assert np.allclose(prop.weights["NavigateTo"], [0.25, 0.0, 0.75])
    assert np.allclose(sum(prop.weights["NavigateTo"]), 1.0)
    # Controllers without successes fall back to uniform.
    assert np.allclose(prop.weights["Pick"], [1 / 3] * 3)


def test_classifier_heldout_logloss_beats_uniform_baseline():
    # Synthetic separable events: component success depends on x sign.
    rng = np.random.default_rng(0)
    events = []
    for _ in range(400):
        x = rng.normal(size=4)
        component = "generic" if x[0] > 0 else "uniform"
        events.append(("Pick", x, component, True))
    cfg = ExperimentConfig(mode="offline", epochs=300, seed=1)
    clf = classifier_from_events(events, cfg, trial=0)
    held = []
    for _ in range(200):
        x = rng.normal(size=4)
        label = "generic" if x[0] > 0 else "uniform"
        p = clf.weights_for(ControllerKind.PICK, x)
        held.append(-np.log(max(p[COMPONENT_ORDER.index(label)], 1e-12)))
    assert np.mean(held) < np.log(3.0)


def test_dump_viz_row_counts(tmp_path):
    cfg = ExperimentConfig(mode="offline", epochs=30, seed=3, domains=("Books",))
    model, dataset = train_viz_model("PushBlock", "NStep", cfg, n_data=60, seed=2)
    out = dump_viz("PushBlock", "NStep", model, 40, tmp_path, dataset=dataset, seed=2)
    observed = (out / "observed_pushblock_nstep.jsonl").read_text().strip().split("\n")
    learned = (out / "learned_pushblock_nstep.jsonl").read_text().strip().split("\n")
    assert len(observed) == 60
    assert len(learned) == 40
    row = json.loads(learned[0])
    assert set(row) == {"state", "phi"}


def test_aggregate_endpoints_match_totals():
    rows = [
        MetricsRecord(0, "m", "none", "Books", 0, True, 10),
        MetricsRecord(0, "m", "none", "Books", 1, False, 20),
        MetricsRecord(1, "m", "none", "Books", 0, True, 30),
        MetricsRecord(1, "m", "none", "Books", 1, True, 5),
    ]
    agg = aggregate(rows)["m"]
    assert agg["problems_solved"] == 3
    end_samples, end_solved = agg["cumulative_curve"][-1]
    assert end_samples == np.mean([10 + 20, 30 + 5])
    assert end_solved == np.mean([1, 2])


def test_parallel_jobs_match_serial(tmp_path):
    cfg_serial = tiny_offline_cfg(trials=2, n_jobs=1)
    cfg_par = tiny_offline_cfg(trials=2, n_jobs=2)
    run_offline(cfg_serial, tmp_path / "s")
    run_offline(cfg_par, tmp_path / "p")
    assert (tmp_path / "s" / "metrics_n3.csv").read_bytes() == (
        tmp_path / "p" / "metrics_n3.csv"
    ).read_bytes()
