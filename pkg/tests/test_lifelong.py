from dataclasses import replace

import numpy as np
import pytest

from tamp2d.domains import DOMAINS, gen_problem
from tamp2d.lifelong import (
    ExperienceStore,
    Record,
    SchemeKind,
    UpdateScheme,
    bootstrap,
    harvest,
    tag_problem_index,
    update,
)
from tamp2d.nn import TrainConfig
from tamp2d.planner import PlannerConfig, PlanResult, UniformParameterSampler, solve
from tamp2d.samplers import AuxKind, MethodKind, RandTables, aux_signals
from tamp2d.world import ControllerKind, Invalid, TypeSignature, conditioning_vector, simulate


def ones_tables():
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
    return tables


def one_book_problem(seed=0):
    spec = replace(DOMAINS["Books"], object_count_range=(1, 1))
    return gen_problem(spec, seed)


def solved_result(seed=0):
    problem = one_book_problem(seed)
    cfg = PlannerConfig(sample_budget=10_000)
    result = solve(problem, UniformParameterSampler(), cfg, np.random.default_rng(seed))
    assert result.solved
    return problem, result


# ---------------------------------------------------------------------------
# harvest


def test_harvest_exhausted_is_empty():
    problem = one_book_problem()
    result = PlanResult(False, None, None, 123, [])
    assert harvest(result, problem) == []


def test_harvest_one_record_per_step_with_matching_controllers():
    problem, result = solved_result()
    records = harvest(result, problem)
    assert len(records) == len(result.skeleton.steps) == 4
    controllers = [sig.controller for sig, _ in records]
    assert controllers == [
        ControllerKind.NAVIGATE_TO,
        ControllerKind.PICK,
        ControllerKind.NAVIGATE_TO,
        ControllerKind.PLACE,
    ]
    # Signals recorded at the pre-step state match a fresh recomputation.
    state = problem.init
    for (sig, rec), action, phi in zip(records, result.skeleton.steps, result.params):
        want_x = conditioning_vector(state, action)
        want_z = aux_signals(action.controller, state, action.bindings, phi)
        assert np.array_equal(rec.x, want_x)
        assert np.array_equal(rec.z, want_z)
        state = simulate(state, action, phi)
        assert not isinstance(state, Invalid)


def test_tag_problem_index():
    problem, result = solved_result()
    records = tag_problem_index(harvest(result, problem), 17)
    assert all(r.problem_index == 17 for _, r in records)


# ---------------------------------------------------------------------------
# store


def test_store_round_trip_and_prefix_extension(tmp_path):
    problem, result = solved_result()
    records = tag_problem_index(harvest(result, problem), 0)
    store = ExperienceStore()
    store.extend(records[:2])
    store.save(tmp_path / "a")
    first = {
        p.name: p.read_text() for p in (tmp_path / "a").glob("*.jsonl")
    }
    store.extend(records[2:])
    store.save(tmp_path / "b")
    second = {
        p.name: p.read_text() for p in (tmp_path / "b").glob("*.jsonl")
    }
    for name, text in first.items():
        assert second[name].startswith(text)
    loaded = ExperienceStore.load(tmp_path / "b")
    assert loaded.total() == store.total()
    for sig in store.partitions:
        got = loaded.records(sig)
        want = store.records(sig)
        assert len(got) == len(want)
        for g, w in zip(got, want):
            assert np.allclose(g.x, w.x) and np.allclose(g.phi, w.phi)


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_samples_uniform_and_isolated():
    problem = one_book_problem()
    bank = bootstrap(MethodKind.PER_DOMAIN_MIXTURE, ones_tables())
    from tamp2d.world import ground_operators

    ground = ground_operators(DOMAINS["Books"].operators(), problem.init)
    for action in ground:
        assert bank.num_candidates(action) == 1
        comps = bank.components_for(action.signature())
        assert [c[0] for c in comps] == ["uniform"]


PLACE_SIG = TypeSignature(ControllerKind.PLACE, ("book", "shelf"))


def synthetic_place_records(value: float, count: int, x_base: np.ndarray) -> list:
    recs = []
    for i in range(count):
        phi = np.array([value])
        recs.append((PLACE_SIG, Record(x_base, phi, np.zeros(4), i)))
    return recs


def train_two_phase(scheme_kind: SchemeKind, epochs=500):
    rng = np.random.default_rng(0)
    x_base = rng.uniform(0.0, 1.0, size=20)
    bank = bootstrap(MethodKind.SPECIALIZED, ones_tables())
    store = ExperienceStore()
    cfg = TrainConfig(epochs=epochs, batch_size=512)
    old = synthetic_place_records(1.5, 25, x_base)
    update(bank, store, old, UpdateScheme(SchemeKind.RETRAIN), seed=1, cfg=cfg)
    new = synthetic_place_records(2.5, 25, x_base)
    update(bank, store, new, UpdateScheme(scheme_kind), seed=2, cfg=cfg)
    model = bank.specialized[PLACE_SIG]
    samples = model.sample_batch(x_base, np.random.default_rng(9), 1000)[:, 0]
    near_a = np.abs(samples - 1.5) <= 0.4
    near_b = np.abs(samples - 2.5) <= 0.4
    return near_a.mean(), near_b.mean()


def test_replay_covers_both_modes():
    frac_a, frac_b = train_two_phase(SchemeKind.REPLAY)
    assert frac_a >= 0.25
    assert frac_b >= 0.25


def test_finetune_forgets_old_mode():
    frac_a, frac_b = train_two_phase(SchemeKind.FINETUNE)
    assert frac_b >= 0.8


def test_replay_default_adapt_epochs():
    assert UpdateScheme(SchemeKind.REPLAY).adapt_epochs == 100


def test_empty_new_data_leaves_bank_unchanged():
    bank = bootstrap(MethodKind.PER_DOMAIN_MIXTURE, ones_tables())
    store = ExperienceStore()
    cfg = TrainConfig(epochs=5)
    out = update(bank, store, [], UpdateScheme(SchemeKind.FINETUNE), seed=0, cfg=cfg)
    assert out.specialized == {} and out.generic_per_domain == {} and out.generic_cross == {}


def test_update_does_not_touch_absent_controllers():
    rng = np.random.default_rng(0)
    x_base = rng.uniform(0.0, 1.0, size=20)
    bank = bootstrap(MethodKind.PER_DOMAIN_MIXTURE, ones_tables())
    store = ExperienceStore()
    cfg = TrainConfig(epochs=5)
    update(bank, store, synthetic_place_records(1.0, 6, x_base), UpdateScheme(SchemeKind.RETRAIN), 0, cfg)
    assert set(bank.specialized) == {PLACE_SIG}
    keys = set(bank.generic_per_domain)
    assert keys == {("Place", "Books")}
    # A pick action still has only the uniform component.
    problem = one_book_problem()
    from tamp2d.world import ground_operators

    pick = next(
        g
        for g in ground_operators(DOMAINS["Books"].operators(), problem.init)
        if g.controller is ControllerKind.PICK
    )
    assert [c[0] for c in bank.components_for(pick.signature())] == ["uniform"]


def test_replay_balanced_batch_composition():
    # Instrument the balanced trainer: expected new-data fraction 0.5 +/- 0.05.
    from tamp2d.nn import Mlp, train_balanced

    counts = []

    def counting_loss(net, batch, rng):
        x = batch[0]
        counts.append(np.mean(x[:, 0] == 1.0))
        noise, aux, cache = net.forward_batch_cached(batch[1])
        g = np.zeros_like(noise)
        return 0.0, net.backward(cache, g, None)

    n_new, n_old = 37, 911
    new = (np.ones((n_new, 1)), np.zeros((n_new, 4)))
    old = (np.zeros((n_old, 1)), np.zeros((n_old, 4)))
    net = Mlp(4, 2, 0, hidden=(8, 8), seed=0)
    train_balanced(net, new, old, counting_loss, TrainConfig(batch_size=512), seed=0, epochs=40)
    assert abs(np.mean(counts) - 0.5) <= 0.05


def test_store_extended_after_update():
    rng = np.random.default_rng(0)
    x_base = rng.uniform(0.0, 1.0, size=20)
    bank = bootstrap(MethodKind.SPECIALIZED, ones_tables())
    store = ExperienceStore()
    cfg = TrainConfig(epochs=5)
    update(bank, store, synthetic_place_records(1.0, 4, x_base), UpdateScheme(SchemeKind.RETRAIN), 0, cfg)
    assert store.total() == 4
    update(bank, store, synthetic_place_records(2.0, 3, x_base), UpdateScheme(SchemeKind.RETRAIN), 0, cfg)
    assert store.total() == 7
