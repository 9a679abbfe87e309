import numpy as np
import pytest

from tamp2d.nn import (
    Adam,
    Mlp,
    Normalizer,
    TrainConfig,
    aux_forward,
    forward,
    load_checkpoint,
    mlp_arrays,
    mlp_from_arrays,
    mlp_meta,
    save_checkpoint,
    sinusoidal_embed,
    sinusoidal_embed_batch,
    train,
)


def mse_loss(targets_noise, targets_aux=None):
    """Quadratic loss over one or both heads with analytic output gradients."""

    def loss_fn(net, batch, rng):
        (x,) = batch[:1]
        noise, aux, cache = net.forward_batch_cached(x)
        n = len(x)
        g_noise = g_aux = None
        loss = 0.0
        if targets_noise is not None:
            diff = noise - targets_noise(batch)
            loss += float(np.mean(diff**2))
            g_noise = 2.0 * diff / diff.size
        if targets_aux is not None:
            diff_a = aux - targets_aux(batch)
            loss += float(np.mean(diff_a**2))
            g_aux = 2.0 * diff_a / diff_a.size
        grads = net.backward(cache, g_noise, g_aux)
        return loss, grads

    return loss_fn


# ---------------------------------------------------------------------------
# embeddings


def test_embed_t0_sin_zero_cos_one():
    emb = sinusoidal_embed(0, 12)
    assert np.allclose(emb[0::2], 0.0)
    assert np.allclose(emb[1::2], 1.0)


def test_embed_bounded_and_deterministic():
    a = sinusoidal_embed(37, 20)
    b = sinusoidal_embed(37, 20)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0)


def test_embed_distinct_over_1_to_100():
    embs = sinusoidal_embed_batch(np.arange(1, 101), 12)
    min_gap = np.inf
    for i in range(100):
        for j in range(i + 1, 100):
            min_gap = min(min_gap, np.max(np.abs(embs[i] - embs[j])))
    assert min_gap > 1e-6


def test_embed_odd_dim_rejected():
    with pytest.raises(ValueError):
        sinusoidal_embed(1, 7)


def test_embed_batch_matches_single():
    batch = sinusoidal_embed_batch(np.array([0, 5, 99]), 16)
    for row, t in zip(batch, (0, 5, 99)):
        assert np.allclose(row, sinusoidal_embed(t, 16))


# ---------------------------------------------------------------------------
# forward


def test_zero_weights_outputs_equal_biases():
    net = Mlp(4, 3, 2, hidden=(8, 8), seed=0)
    for key in ("W1", "W2", "Wn", "Wa"):
        net.params[key][:] = 0.0
    net.params["bn"][:] = [1.0, -2.0, 3.0]
    net.params["ba"][:] = [0.5, 0.25]
    noise, aux = forward(net, np.zeros(4))
    assert np.allclose(noise, [1.0, -2.0, 3.0])
    assert np.allclose(aux, [0.5, 0.25])


def test_forward_dimension_mismatch():
    net = Mlp(4, 2, 2, hidden=(8, 8))
    with pytest.raises(ValueError):
        forward(net, np.zeros(5))


def test_forward_batch_matches_single():
    net = Mlp(6, 3, 2, hidden=(16, 16), seed=3)
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(5, 6))
    batch_noise, batch_aux = net.forward(xs)
    for i in range(5):
        noise, aux = net.forward(xs[i])
        assert np.allclose(batch_noise[i], noise)
        assert np.allclose(batch_aux[i], aux)


# ---------------------------------------------------------------------------
# gradients vs central finite differences


def analytic_and_fd_grads(net, x, tn, ta, h=1e-5):
    def scalar_loss():
        noise, aux = net.forward(x)
        return float(np.sum((noise - tn) ** 2) + np.sum((aux - ta) ** 2))

    noise, aux, cache = net.forward_batch_cached(x[None, :])
    grads = net.backward(cache, 2.0 * (noise - tn), 2.0 * (aux - ta))
    fd = {}
    for key, p in net.params.items():
        if p.size == 0:
            continue
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = scalar_loss()
            flat[i] = orig - h
            down = scalar_loss()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        fd[key] = g
    return grads, fd


def test_gradients_match_finite_differences_all_layers_both_heads():
    rng = np.random.default_rng(42)
    for instance in range(3):
        net = Mlp(8, 3, 2, hidden=(10, 9), seed=instance)
        x = rng.normal(size=8)
        tn = rng.normal(size=3)
        ta = rng.normal(size=2)
        grads, fd = analytic_and_fd_grads(net, x, tn, ta)
        for key in fd:
            denom = np.maximum(np.abs(fd[key]), 1e-6)
            rel = np.abs(grads[key] - fd[key]) / denom
            assert rel.max() < 1e-4, (key, rel.max())


# ---------------------------------------------------------------------------
# training


def test_train_fits_linear_function():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(1000, 1))
    y = 2.0 * x
    net = Mlp(1, 1, 0, seed=1)
    cfg = TrainConfig(epochs=1000, batch_size=512, learning_rate=1e-3)
    history = train(net, (x, y), mse_loss(lambda b: b[1]), cfg, seed=7)
    pred, _ = net.forward(x)
    assert float(np.mean((pred - y) ** 2)) < 1e-4
    assert all(np.isfinite(history))


def test_zero_learning_rate_leaves_weights_unchanged():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(64, 3))
    y = rng.normal(size=(64, 2))
    net = Mlp(3, 2, 0, hidden=(16, 16), seed=5)
    before = {k: v.copy() for k, v in net.params.items()}
    cfg = TrainConfig(epochs=10, batch_size=32, learning_rate=0.0)
    train(net, (x, y), mse_loss(lambda b: b[1]), cfg, seed=0)
    for key in before:
        assert np.array_equal(net.params[key], before[key])


def test_same_seed_bitwise_identical_weights():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(700, 4))
    y = x[:, :2] * 3.0 - 1.0
    nets = []
    for _ in range(2):
        net = Mlp(4, 2, 0, hidden=(32, 32), seed=9)
        cfg = TrainConfig(epochs=20, batch_size=256)
        train(net, (x, y), mse_loss(lambda b: b[1]), cfg, seed=123)
        nets.append(net)
    for key in nets[0].params:
        assert np.array_equal(nets[0].params[key], nets[1].params[key])


def test_aux_forward_definition_and_fit():
    rng = np.random.default_rng(3)
    phi = rng.uniform(0, 1, size=(2000, 2))
    x = rng.uniform(0, 1, size=(2000, 2))
    z = np.abs(phi - x)
    from tamp2d.nn import sinusoidal_embed_batch

    inputs = np.concatenate([phi, x, sinusoidal_embed_batch(np.zeros(len(x)), 2)], axis=1)
    net = Mlp(6, 2, 2, seed=2)
    cfg = TrainConfig(epochs=500, batch_size=512)
    train(net, (inputs, z), mse_loss(None, targets_aux=lambda b: b[1]), cfg, seed=11)
    # Definitional consistency of the helper.
    got = aux_forward(net, phi[0], x[0])
    _, want = net.forward(inputs[0])
    assert np.allclose(got, want)
    # Held-out accuracy.
    phi_t = rng.uniform(0, 1, size=(500, 2))
    x_t = rng.uniform(0, 1, size=(500, 2))
    z_t = np.abs(phi_t - x_t)
    preds = np.array([aux_forward(net, p, xx) for p, xx in zip(phi_t, x_t)])
    rmse = float(np.sqrt(np.mean((preds - z_t) ** 2)))
    assert rmse < 0.05


# ---------------------------------------------------------------------------
# normalizer


def test_normalizer_round_trip_and_unit_range():
    rng = np.random.default_rng(1)
    data = rng.uniform(-7, 9, size=(500, 4))
    norm = Normalizer.fit(data)
    z = norm.normalize(data)
    assert z.min() >= -1e-12 and z.max() <= 1.0 + 1e-12
    back = norm.denormalize(z)
    assert np.max(np.abs(back - data)) < 1e-9


def test_normalizer_small_range_shifts_without_rescale():
    data = np.array([[5.0, 0.0], [5.2, 100.0]])
    norm = Normalizer.fit(data)
    assert norm.scale[0] == 1.0
    assert norm.scale[1] == 100.0
    z = norm.normalize(data)
    assert np.allclose(z[:, 0], [0.0, 0.2])


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip_bit_exact(tmp_path):
    net = Mlp(6, 3, 2, hidden=(12, 12), seed=4)
    meta = {"mlp": mlp_meta(net), "controller": "Pick", "signature": ["pick", "book"]}
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, mlp_arrays(net), meta)
    arrays, loaded_meta = load_checkpoint(path)
    restored = mlp_from_arrays(arrays, loaded_meta)
    assert loaded_meta["controller"] == "Pick"
    for key in net.params:
        assert np.array_equal(restored.params[key], net.params[key])


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_checkpoint(path)
