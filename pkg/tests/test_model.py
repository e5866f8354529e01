import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from curriq.model import (Mlp, NetworkConfig, SgdOptimizer, backward_masked, forward,
                          init_model, load_checkpoint, poly_lr, save_checkpoint, sgd_step)
from curriq.numerics import NonFiniteError, cross_entropy, softmax


def small_model(seed=0, input_dim=3, hidden=(5, 4)):
    m = init_model(NetworkConfig(input_dim, hidden), seed)
    # acceptance-grade gradient tests need a non-degenerate head
    rng = np.random.default_rng(seed + 1)
    m.weights[-1] = rng.normal(scale=0.5, size=m.weights[-1].shape)
    m.biases[-1] = rng.normal(scale=0.1, size=m.biases[-1].shape)
    return m


def reference_forward(model, x):
    """Independently coded layer-by-layer evaluation."""
    h = np.asarray(x, dtype=float)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if i == len(model.weights) - 1 else np.maximum(z, 0.0)
    return h


def per_sample_gradient_oracle(model, x, labels, mask):
    """Accumulate singleton-batch gradients over the unmasked samples."""
    totals = [(np.zeros_like(w), np.zeros_like(b))
              for w, b in zip(model.weights, model.biases)]
    total_loss = 0.0
    for i in range(x.shape[0]):
        if mask[i] == 0:
            continue
        grads, loss = backward_masked(model, x[i:i + 1], labels[i:i + 1], np.ones(1))
        total_loss += loss
        for layer, (dw, db) in enumerate(grads):
            totals[layer][0][:] += dw
            totals[layer][1][:] += db
    return totals, total_loss


def test_zero_network_maps_to_zero_logits():
    model = Mlp([np.zeros((3, 4)), np.zeros((4, 2))], [np.zeros(4), np.zeros(2)])
    x = np.random.default_rng(0).normal(size=(5, 3))
    assert np.array_equal(forward(model, x), np.zeros((5, 2)))


def test_single_linear_layer_matches_matmul():
    rng = np.random.default_rng(1)
    w, b = rng.normal(size=(3, 2)), rng.normal(size=2)
    model = Mlp([w], [b])
    x = rng.normal(size=(4, 3))
    assert np.allclose(forward(model, x), x @ w + b, atol=1e-15)


def test_forward_matches_duplicate_oracle():
    model = small_model()
    x = np.random.default_rng(2).normal(size=(6, 3))
    assert np.allclose(forward(model, x), reference_forward(model, x), atol=1e-12, rtol=0)


def test_forward_rejects_wrong_feature_dim():
    with pytest.raises(ValueError, match="feature dim"):
        forward(small_model(), np.zeros((2, 7)))


def test_init_is_deterministic_and_head_starts_uncertain():
    a = init_model(NetworkConfig(2, (8, 8)), 42)
    b = init_model(NetworkConfig(2, (8, 8)), 42)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    x = np.random.default_rng(3).normal(size=(4, 2))
    assert np.allclose(softmax(forward(a, x), axis=-1), 0.5)


def test_backward_all_zero_mask():
    model = small_model()
    x = np.random.default_rng(4).normal(size=(5, 3))
    labels = np.array([0, 1, 0, 1, 1])
    grads, loss = backward_masked(model, x, labels, np.zeros(5))
    assert loss == 0.0
    for dw, db in grads:
        assert not dw.any() and not db.any()


def test_backward_all_ones_mask_equals_unmasked_reference():
    # mirrors the implementation's op order minus the mask multiply; x*1.0 is
    # bit-exact so the results must be identical, not merely close
    model = small_model()
    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 3))
    labels = rng.integers(0, 2, size=6)

    logits = forward(model, x)
    inputs = [np.asarray(x, dtype=float)]
    h = inputs[0]
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i < len(model.weights) - 1:
            h = np.maximum(z, 0.0)
            inputs.append(h)
    probs = softmax(logits, axis=-1)
    picked = probs[np.arange(6), labels]
    ref_loss = float(np.sum(-np.log(np.maximum(picked, 1e-12))))
    delta = probs
    delta[np.arange(6), labels] -= 1.0
    ref = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        ref[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i:
            delta = (delta @ model.weights[i].T) * (inputs[i] > 0)

    grads, loss = backward_masked(model, x, labels, np.ones(6))
    assert loss == ref_loss
    for (dw, db), (rw, rb) in zip(grads, ref):
        assert np.array_equal(dw, rw)
        assert np.array_equal(db, rb)


def test_backward_subset_mask_matches_per_sample_accumulation():
    model = small_model()
    rng = np.random.default_rng(6)
    x = rng.normal(size=(8, 3))
    labels = rng.integers(0, 2, size=8)
    mask = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=float)
    grads, loss = backward_masked(model, x, labels, mask)
    oracle, oracle_loss = per_sample_gradient_oracle(model, x, labels, mask)
    assert math.isclose(loss, oracle_loss, abs_tol=1e-10)
    for (dw, db), (ow, ob) in zip(grads, oracle):
        assert np.allclose(dw, ow, atol=1e-10, rtol=0)
        assert np.allclose(db, ob, atol=1e-10, rtol=0)


def test_backward_loss_is_sum_of_unmasked_cross_entropies():
    model = small_model()
    rng = np.random.default_rng(7)
    x = rng.normal(size=(5, 3))
    labels = rng.integers(0, 2, size=5)
    mask = np.array([1, 1, 0, 1, 0], dtype=float)
    _, loss = backward_masked(model, x, labels, mask)
    probs = softmax(forward(model, x), axis=-1)
    expected = sum(cross_entropy(probs[i], int(labels[i])) for i in range(5) if mask[i])
    assert math.isclose(loss, expected, abs_tol=1e-10)


def test_backward_mask_length_mismatch():
    model = small_model()
    with pytest.raises(ValueError, match="mask length"):
        backward_masked(model, np.zeros((3, 3)), np.zeros(3, dtype=int), np.ones(4))


def test_sgd_zero_gradient_is_a_fixed_point():
    model = small_model()
    before = model.copy()
    grads = [(np.zeros_like(w), np.zeros_like(b))
             for w, b in zip(model.weights, model.biases)]
    sgd_step(model, SgdOptimizer(initial_lr=0.1, momentum=0.9, total_epochs=10), grads)
    for wa, wb in zip(model.weights, before.weights):
        assert np.array_equal(wa, wb)


def test_sgd_scalar_arithmetic():
    model = Mlp([np.array([[1.0]])], [np.array([0.0])])
    opt = SgdOptimizer(initial_lr=0.1, momentum=0.0, power=0.9, total_epochs=10, current_epoch=0)
    sgd_step(model, opt, [(np.array([[0.5]]), np.array([0.0]))])
    assert model.weights[0][0, 0] == pytest.approx(0.95)


def test_sgd_momentum_matches_velocity_recurrence():
    rng = np.random.default_rng(8)
    w0 = rng.normal(size=(2, 2))
    model = Mlp([w0.copy()], [np.zeros(2)])
    opt = SgdOptimizer(initial_lr=0.05, momentum=0.7, power=0.9, total_epochs=100)
    grads = [rng.normal(size=(2, 2)) for _ in range(3)]

    # hand-rolled recurrence: v <- m v + g, w <- w - lr v
    w, v = w0.copy(), np.zeros((2, 2))
    lr = 0.05 * (1 - 0 / 100) ** 0.9
    for g in grads:
        v = 0.7 * v + g
        w = w - lr * v
        sgd_step(model, opt, [(g, np.zeros(2))])
    assert np.allclose(model.weights[0], w, atol=1e-12, rtol=0)


def test_sgd_rejects_nonfinite_gradient_naming_layer():
    model = small_model()
    grads = [(np.zeros_like(w), np.zeros_like(b))
             for w, b in zip(model.weights, model.biases)]
    grads[1] = (np.full_like(model.weights[1], np.nan), np.zeros_like(model.biases[1]))
    with pytest.raises(NonFiniteError, match="layer 1"):
        sgd_step(model, SgdOptimizer(total_epochs=10), grads)


@given(st.floats(min_value=1e-4, max_value=0.01),
       st.floats(min_value=-3, max_value=3).filter(lambda v: abs(v) > 1e-3))
def test_sgd_step_decreases_convex_quadratic(lr, w0):
    # toy objective f(w) = w^2 / 2 with gradient w
    model = Mlp([np.array([[w0]])], [np.array([0.0])])
    opt = SgdOptimizer(initial_lr=lr, momentum=0.0, total_epochs=10, current_epoch=0)
    sgd_step(model, opt, [(np.array([[w0]]), np.array([0.0]))])
    assert model.weights[0][0, 0] ** 2 < w0 ** 2


def test_poly_lr_endpoints_and_derived_value():
    opt = SgdOptimizer(initial_lr=0.001, power=0.9, total_epochs=50, current_epoch=0)
    assert poly_lr(opt) == 0.001
    opt.current_epoch = 50
    assert poly_lr(opt) == 0.0
    opt.current_epoch = 25
    # 0.001 * 0.5**0.9 evaluated independently
    assert poly_lr(opt) == pytest.approx(0.0005358867312681466, rel=1e-12)


def test_poly_lr_monotone_nonincreasing():
    opt = SgdOptimizer(initial_lr=0.01, power=0.9, total_epochs=37)
    values = []
    for e in range(38):
        opt.current_epoch = e
        values.append(poly_lr(opt))
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 0.01 for v in values)


def test_checkpoint_round_trip_is_exact(tmp_path):
    model = small_model(seed=11)
    path = tmp_path / "model.txt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.n_layers == model.n_layers
    for (wa, ba), (wb, bb) in zip(zip(model.weights, model.biases),
                                  zip(loaded.weights, loaded.biases)):
        assert np.array_equal(wa, wb)
        assert np.array_equal(ba, bb)


def test_load_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a checkpoint\n")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(path)


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_full_network_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    model = small_model(seed=seed, input_dim=int(rng.integers(2, 5)),
                        hidden=tuple(rng.integers(3, 7, size=int(rng.integers(1, 3)))))
    n = int(rng.integers(2, 5))
    x = rng.normal(size=(n, model.weights[0].shape[0]))
    labels = rng.integers(0, 2, size=n)
    mask = np.ones(n)

    # central differences are meaningless across a ReLU kink; reject instances
    # whose preactivations sit within the FD step of one
    h = x
    for i, (w, b) in enumerate(zip(model.weights[:-1], model.biases[:-1])):
        z = h @ w + b
        assume(np.abs(z).min() > 1e-3)
        h = np.maximum(z, 0.0)

    def loss_at(params):
        trial = Mlp([p.copy() for p in params[0]], [p.copy() for p in params[1]])
        _, loss = backward_masked(trial, x, labels, mask)
        return loss

    grads, _ = backward_masked(model, x, labels, mask)
    step = 1e-5
    for layer in range(model.n_layers):
        for arrays, grad in ((model.weights, grads[layer][0]),
                             (model.biases, grads[layer][1])):
            flat = arrays[layer].reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                up = loss_at((model.weights, model.biases))
                flat[k] = orig - step
                down = loss_at((model.weights, model.biases))
                flat[k] = orig
                fd = (up - down) / (2 * step)
                g = grad.reshape(-1)[k]
                denom = max(abs(g), abs(fd))
                if denom > 1e-4:
                    assert abs(g - fd) / denom <= 1e-4, (layer, k, g, fd)
                else:
                    assert abs(g - fd) <= 1e-8
