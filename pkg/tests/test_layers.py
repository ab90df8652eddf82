import numpy as np
import pytest

from gradcheck import assert_close_grad
from network.constants import ForwardMode, ResBlockKind
from network.layers.attention import self_attention_backward, self_attention_forward
from network.layers.batchnorm import batch_norm_backward, batch_norm_forward
from network.layers.classifier import (
    classifier_backward,
    classifier_forward,
    cross_entropy_loss,
    softmax,
    softmax_cross_entropy_backward,
)
from network.layers.conv import (
    conv1d_backward,
    conv1d_forward,
    dilated_causal_conv_forward,
    receptive_span,
    weight_norm_apply,
    weight_norm_backward,
)
from network.layers.residual import res_block_backward, res_block_forward
from network.layers.tcn import dropout_mask, tcn_block_backward, tcn_block_forward


# ===============================================================================
# Dilated causal convolution
# ===============================================================================

def test_hand_evaluated_dilated_conv():
    x = np.array([[1.0, 2.0, 3.0, 4.0]])
    w = np.ones((1, 1, 2))
    y = dilated_causal_conv_forward(x, w, None, k=2, d=2)
    np.testing.assert_array_equal(y, [[1.0, 2.0, 4.0, 6.0]])


def test_kernel_one_is_pointwise(rng):
    x = rng.normal(size=(3, 9))
    w = rng.normal(size=(2, 3, 1))
    for d in (1, 3):
        y = dilated_causal_conv_forward(x, w, np.zeros(2), k=1, d=d)
        np.testing.assert_allclose(y, w[:, :, 0] @ x, atol=1e-12)


def test_dilation_one_is_ordinary_causal_convolution(rng):
    x = rng.normal(size=20)
    f = rng.normal(size=4)
    y = dilated_causal_conv_forward(x[None, :], f[None, None, :], None, k=4, d=1)
    np.testing.assert_allclose(y[0], np.convolve(x, f)[:20], atol=1e-12)


def test_conv_keeps_length_and_rejects_bad_shapes(rng):
    for k, d, t in [(2, 1, 5), (3, 4, 7), (5, 2, 30)]:
        y = dilated_causal_conv_forward(rng.normal(size=(2, 3, t)), rng.normal(size=(4, 3, k)), None, k=k, d=d)
        assert y.shape == (2, 4, t)
    with pytest.raises(ValueError):
        dilated_causal_conv_forward(rng.normal(size=(3, 5)), rng.normal(size=(4, 3, 2)), None, k=3, d=1)
    with pytest.raises(ValueError):
        dilated_causal_conv_forward(rng.normal(size=(3, 5)), rng.normal(size=(4, 3, 2)), None, k=2, d=0)


def test_conv_is_causal(rng):
    w = rng.normal(size=(4, 3, 3))
    for _ in range(100):
        x = rng.normal(size=(1, 3, 25))
        s = int(rng.integers(0, 24))
        t = int(rng.integers(s + 1, 25))
        y, _ = conv1d_forward(x, w, None, dilation=2)
        x2 = x.copy()
        x2[:, :, t] += rng.normal(size=3)
        y2, _ = conv1d_forward(x2, w, None, dilation=2)
        assert np.array_equal(y[:, :, :s + 1], y2[:, :, :s + 1])


def test_receptive_span():
    assert receptive_span(2, 1) == 2
    assert receptive_span(5, 4) == 17


def test_conv_gradients(rng):
    x = rng.normal(size=(2, 3, 10))
    w = rng.normal(size=(4, 3, 3))
    b = rng.normal(size=4)
    r = rng.normal(size=(2, 4, 10))

    def loss():
        return float(np.sum(conv1d_forward(x, w, b, 2)[0] * r))

    _, cache = conv1d_forward(x, w, b, 2)
    dx, dw, db = conv1d_backward(r, cache)
    assert_close_grad(dx, loss, x, "x")
    assert_close_grad(dw, loss, w, "w")
    assert_close_grad(db, loss, b, "b")


# ===============================================================================
# Weight normalization
# ===============================================================================

def test_weight_norm_examples(rng):
    v = rng.normal(size=(3, 2, 4))
    unit = v / np.linalg.norm(v.reshape(3, -1), axis=1)[:, None, None]
    np.testing.assert_allclose(weight_norm_apply(unit, np.ones(3)), unit, atol=1e-12)
    np.testing.assert_array_equal(weight_norm_apply(v, np.zeros(3)), np.zeros_like(v))
    g = np.array([0.5, -2.0, 3.0])
    w = weight_norm_apply(v, g)
    np.testing.assert_allclose(np.linalg.norm(w.reshape(3, -1), axis=1), np.abs(g), rtol=1e-12)
    with pytest.raises(ValueError):
        weight_norm_apply(np.zeros((2, 2, 2)), np.ones(2))


def test_weight_norm_gradients(rng):
    v = rng.normal(size=(3, 2, 4))
    g = rng.normal(size=3)
    r = rng.normal(size=v.shape)

    def loss():
        return float(np.sum(weight_norm_apply(v, g) * r))

    dv, dg = weight_norm_backward(r, v, g)
    assert_close_grad(dv, loss, v, "v")
    assert_close_grad(dg, loss, g, "g")


# ===============================================================================
# TCN block
# ===============================================================================

def _tcn_params(rng, c_in, c_out, k, g=0.1, b=10.0):
    # Small g with large positive biases keeps every ReLU on its linear side
    params = {}
    for layer, fan_in in (("conv1", c_in), ("conv2", c_out)):
        params[f"blk.{layer}.v"] = rng.normal(size=(c_out, fan_in, k))
        params[f"blk.{layer}.g"] = np.full(c_out, g)
        params[f"blk.{layer}.b"] = np.full(c_out, b)
    if c_in != c_out:
        params["blk.skip.w"] = rng.normal(size=(c_out, c_in, 1))
        params["blk.skip.b"] = rng.normal(size=c_out)
    return params


def test_dropout_mask():
    assert dropout_mask((2, 3), 0.5, ForwardMode.EVAL, None) is None
    assert dropout_mask((2, 3), 0.0, ForwardMode.TRAIN, None) is None
    with pytest.raises(ValueError):
        dropout_mask((2, 3), 0.3, ForwardMode.TRAIN, None)
    mask = dropout_mask((200, 200), 0.25, ForwardMode.TRAIN, np.random.default_rng(0))
    assert set(np.unique(mask)) == {0.0, 1.0 / 0.75}
    assert mask.mean() == pytest.approx(1.0, abs=0.02)


def test_eval_mode_dropout_is_identity(rng):
    params = _tcn_params(rng, 3, 4, 2)
    x = rng.normal(size=(2, 3, 9))
    y_no_dropout, _ = tcn_block_forward(x, params, "blk", 1, 0.0, ForwardMode.EVAL)
    y_eval, _ = tcn_block_forward(x, params, "blk", 1, 0.45, ForwardMode.EVAL)
    np.testing.assert_array_equal(y_no_dropout, y_eval)


def test_zero_main_path_gives_skip_projection(rng):
    params = _tcn_params(rng, 3, 4, 3, g=0.0, b=0.0)
    x = rng.normal(size=(2, 3, 9))
    y, _ = tcn_block_forward(x, params, "blk", 2, 0.0, ForwardMode.EVAL)
    skip, _ = conv1d_forward(x, params["blk.skip.w"], params["blk.skip.b"])
    np.testing.assert_array_equal(y, skip)


def test_identity_skip_needs_equal_channels(rng):
    params = _tcn_params(rng, 4, 4, 2)
    y, _ = tcn_block_forward(rng.normal(size=(1, 4, 6)), params, "blk", 1, 0.0, ForwardMode.EVAL)
    assert y.shape == (1, 4, 6)
    with pytest.raises(ValueError):
        tcn_block_forward(rng.normal(size=(1, 3, 6)), params, "blk", 1, 0.0, ForwardMode.EVAL)


@pytest.mark.parametrize("c_in", [3, 4])
def test_tcn_block_gradients(rng, c_in):
    params = _tcn_params(rng, c_in, 4, 2)
    x = rng.normal(size=(2, c_in, 12))
    r = rng.normal(size=(2, 4, 12))

    def loss():
        return float(np.sum(tcn_block_forward(x, params, "blk", 2, 0.0, ForwardMode.TRAIN)[0] * r))

    _, cache = tcn_block_forward(x, params, "blk", 2, 0.0, ForwardMode.TRAIN)
    assert cache["conv1"]["pre"].min() > 0 and cache["conv2"]["pre"].min() > 0
    dx, grads = tcn_block_backward(r, cache)
    assert set(grads) == set(params)
    assert_close_grad(dx, loss, x, "x")
    for name in params:
        assert_close_grad(grads[name], loss, params[name], name)


def test_tcn_block_gradients_with_fixed_dropout_mask(rng):
    params = _tcn_params(rng, 3, 4, 2)
    x = rng.normal(size=(2, 3, 8))
    r = rng.normal(size=(2, 4, 8))

    def forward():
        return tcn_block_forward(x, params, "blk", 1, 0.3, ForwardMode.TRAIN, np.random.default_rng(9))

    _, cache = forward()
    _, grads = tcn_block_backward(r, cache)
    assert_close_grad(grads["blk.conv2.v"], lambda: float(np.sum(forward()[0] * r)), params["blk.conv2.v"])


# ===============================================================================
# Self-attention
# ===============================================================================

def _attention_oracle(x, wq, wk, wv):
    c, t = x.shape
    d_k = wq.shape[0]
    q, k, v = wq @ x, wk @ x, wv @ x
    y = np.zeros((c, t))
    alpha = np.zeros((t, t))
    for i in range(t):
        scores = np.array([sum(q[a, i] * k[a, j] for a in range(d_k)) / np.sqrt(d_k) for j in range(t)])
        e = np.exp(scores - scores.max())
        alpha[i] = e / e.sum()
        for j in range(t):
            y[:, i] += alpha[i, j] * v[:, j]
    return y, alpha


def test_attention_matches_loop_oracle(rng):
    x = rng.normal(size=(4, 3))
    wq, wk, wv = rng.normal(size=(2, 4)), rng.normal(size=(2, 4)), rng.normal(size=(4, 4))
    y, alpha, _ = self_attention_forward(x, wq, wk, wv)
    y_ref, alpha_ref = _attention_oracle(x, wq, wk, wv)
    np.testing.assert_allclose(y, y_ref, atol=1e-12)
    np.testing.assert_allclose(alpha, alpha_ref, atol=1e-12)


def test_attention_rows_are_distributions(rng):
    for _ in range(50):
        x = rng.normal(size=(3, 5, 7)) * 3
        _, alpha, _ = self_attention_forward(x, rng.normal(size=(4, 5)), rng.normal(size=(4, 5)), rng.normal(size=(5, 5)))
        np.testing.assert_allclose(alpha.sum(axis=-1), 1.0, atol=1e-9)
        assert alpha.min() >= 0.0 and alpha.max() <= 1.0


def test_zero_query_gives_uniform_attention(rng):
    x = rng.normal(size=(3, 6))
    wv = rng.normal(size=(3, 3))
    y, alpha, _ = self_attention_forward(x, np.zeros((2, 3)), rng.normal(size=(2, 3)), wv)
    np.testing.assert_allclose(alpha, np.full((6, 6), 1 / 6), atol=1e-15)
    np.testing.assert_allclose(y, np.repeat((wv @ x).mean(axis=1, keepdims=True), 6, axis=1), atol=1e-12)


def test_single_step_attention_returns_values(rng):
    x = rng.normal(size=(3, 1))
    y, alpha, cache = self_attention_forward(x, rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), rng.normal(size=(3, 3)))
    np.testing.assert_array_equal(alpha, [[1.0]])
    np.testing.assert_array_equal(y, cache["v"][0])


def test_attention_rejects_bad_dk(rng):
    with pytest.raises(ValueError):
        self_attention_forward(rng.normal(size=(3, 4)), rng.normal(size=(2, 3)), rng.normal(size=(2, 3)),
                               rng.normal(size=(3, 3)), d_k=0)


def test_attention_gradients(rng):
    x = rng.normal(size=(2, 3, 5))
    wq, wk, wv = rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), rng.normal(size=(3, 3))
    r = rng.normal(size=(2, 3, 5))

    def loss():
        return float(np.sum(self_attention_forward(x, wq, wk, wv)[0] * r))

    _, _, cache = self_attention_forward(x, wq, wk, wv)
    dx, grads = self_attention_backward(r, cache)
    assert_close_grad(dx, loss, x, "x")
    assert_close_grad(grads["wq"], loss, wq, "wq")
    assert_close_grad(grads["wk"], loss, wk, "wk")
    assert_close_grad(grads["wv"], loss, wv, "wv")


# ===============================================================================
# Batch normalization
# ===============================================================================

def test_batch_norm_train_statistics(rng):
    x = rng.normal(3.0, 5.0, size=(8, 2, 20))
    y, _ = batch_norm_forward(x, np.ones(2), np.zeros(2), None, None, ForwardMode.TRAIN)
    np.testing.assert_allclose(y.mean(axis=(0, 2)), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=(0, 2)), 1.0, atol=1e-5)

    y, _ = batch_norm_forward(x, np.full(2, 2.0), np.full(2, 3.0), None, None, ForwardMode.TRAIN)
    np.testing.assert_allclose(y.mean(axis=(0, 2)), 3.0, atol=1e-12)
    np.testing.assert_allclose(y.std(axis=(0, 2)), 2.0, atol=1e-5)


def test_batch_norm_running_statistics(rng):
    x = rng.normal(1.0, 2.0, size=(4, 3, 10))
    mean, var = np.zeros(3), np.ones(3)
    batch_norm_forward(x, np.ones(3), np.zeros(3), mean, var, ForwardMode.TRAIN)
    np.testing.assert_allclose(mean, 0.1 * x.mean(axis=(0, 2)))
    np.testing.assert_allclose(var, 0.9 + 0.1 * x.var(axis=(0, 2)))


def test_batch_norm_eval_converges_to_train_normalization(rng):
    x = rng.normal(-2.0, 3.0, size=(6, 2, 12))
    gamma, beta = np.array([1.5, 0.5]), np.array([0.2, -1.0])
    mean, var = np.zeros(2), np.ones(2)
    for _ in range(300):
        y_train, _ = batch_norm_forward(x, gamma, beta, mean, var, ForwardMode.TRAIN)
    y_eval, _ = batch_norm_forward(x, gamma, beta, mean, var, ForwardMode.EVAL)
    np.testing.assert_allclose(y_eval, y_train, atol=1e-6)


def test_batch_norm_needs_two_samples(rng):
    with pytest.raises(ValueError):
        batch_norm_forward(rng.normal(size=(1, 2, 5)), np.ones(2), np.zeros(2), None, None, ForwardMode.TRAIN)
    with pytest.raises(ValueError):
        batch_norm_forward(rng.normal(size=(2, 2, 5)), np.ones(2), np.zeros(2), None, None, ForwardMode.EVAL)


@pytest.mark.parametrize("mode", [ForwardMode.TRAIN, ForwardMode.EVAL])
def test_batch_norm_gradients(rng, mode):
    x = rng.normal(size=(3, 2, 5))
    gamma, beta = rng.normal(size=2), rng.normal(size=2)
    running_mean, running_var = rng.normal(size=2), rng.uniform(0.5, 2.0, size=2)
    r = rng.normal(size=x.shape)

    def forward():
        # Copies keep the running statistics fixed between calls
        return batch_norm_forward(x, gamma, beta, running_mean.copy(), running_var.copy(), mode)

    def loss():
        return float(np.sum(forward()[0] * r))

    _, cache = forward()
    dx, dgamma, dbeta = batch_norm_backward(r, cache)
    assert_close_grad(dx, loss, x, "x")
    assert_close_grad(dgamma, loss, gamma, "gamma")
    assert_close_grad(dbeta, loss, beta, "beta")


# ===============================================================================
# Residual block
# ===============================================================================

def _res_params(rng, c_in, c, k, kind, beta=5.0):
    params = {
        "res.conv1.w": rng.normal(size=(c, c_in, k)),
        "res.conv2.w": rng.normal(size=(c, c, k)),
    }
    bns = ["bn1", "bn2"]
    if kind == ResBlockKind.RESBLOCK2:
        params["res.short.w"] = rng.normal(size=(c, c_in, 1))
        bns.append("short_bn")
    buffers = {}
    for bn in bns:
        params[f"res.{bn}.gamma"] = 1.0 + 0.1 * rng.random(c)
        params[f"res.{bn}.beta"] = np.full(c, beta)
        buffers[f"res.{bn}.running_mean"] = np.zeros(c)
        buffers[f"res.{bn}.running_var"] = np.ones(c)
    return params, buffers


def test_zero_main_path_resblock1_is_relu(rng):
    params, buffers = _res_params(rng, 4, 4, 3, ResBlockKind.RESBLOCK1, beta=0.0)
    params["res.conv1.w"][:] = 0.0
    params["res.conv2.w"][:] = 0.0
    for bn in ("bn1", "bn2"):
        params[f"res.{bn}.gamma"] = np.ones(4)
    x = rng.normal(size=(3, 4, 7))
    y, _ = res_block_forward(x, params, buffers, ResBlockKind.RESBLOCK1, ForwardMode.TRAIN)
    np.testing.assert_array_equal(y, np.maximum(x, 0.0))


def test_zero_main_path_resblock2_is_relu_of_shortcut(rng):
    params, buffers = _res_params(rng, 3, 4, 3, ResBlockKind.RESBLOCK2, beta=0.0)
    params["res.conv1.w"][:] = 0.0
    params["res.conv2.w"][:] = 0.0
    for bn in ("bn1", "bn2"):
        params[f"res.{bn}.gamma"] = np.ones(4)
    x = rng.normal(size=(3, 3, 7))
    y, _ = res_block_forward(x, params, {}, ResBlockKind.RESBLOCK2, ForwardMode.TRAIN)
    c, _ = conv1d_forward(x, params["res.short.w"], None)
    h, _ = batch_norm_forward(c, params["res.short_bn.gamma"], params["res.short_bn.beta"], None, None,
                              ForwardMode.TRAIN)
    np.testing.assert_allclose(y, np.maximum(h, 0.0), atol=1e-12)


def test_resblock_matches_composition_oracle(rng):
    params, buffers = _res_params(rng, 4, 4, 3, ResBlockKind.RESBLOCK2, beta=0.0)
    x = rng.normal(size=(2, 4, 6))
    y, _ = res_block_forward(x, params, {k: v.copy() for k, v in buffers.items()}, ResBlockKind.RESBLOCK2,
                             ForwardMode.EVAL)

    def conv_bn(inp, conv, bn):
        w = params[f"res.{conv}.w"]
        out = np.zeros((inp.shape[0], w.shape[0], inp.shape[2]))
        for n in range(inp.shape[0]):
            for o in range(w.shape[0]):
                for s in range(inp.shape[2]):
                    for i in range(w.shape[2]):
                        if s - i >= 0:
                            out[n, o, s] += w[o, :, i] @ inp[n, :, s - i]
        mean, var = buffers[f"res.{bn}.running_mean"], buffers[f"res.{bn}.running_var"]
        return (params[f"res.{bn}.gamma"][None, :, None] * (out - mean[None, :, None])
                / np.sqrt(var[None, :, None] + 1e-5) + params[f"res.{bn}.beta"][None, :, None])

    main = conv_bn(np.maximum(conv_bn(x, "conv1", "bn1"), 0.0), "conv2", "bn2")
    expected = np.maximum(main + conv_bn(x, "short", "short_bn"), 0.0)
    np.testing.assert_allclose(y, expected, atol=1e-12)


def test_resblock1_rejects_channel_change(rng):
    params, buffers = _res_params(rng, 3, 4, 3, ResBlockKind.RESBLOCK1)
    with pytest.raises(ValueError):
        res_block_forward(rng.normal(size=(2, 3, 5)), params, buffers, ResBlockKind.RESBLOCK1, ForwardMode.TRAIN)


@pytest.mark.parametrize("kind", [ResBlockKind.RESBLOCK1, ResBlockKind.RESBLOCK2])
def test_resblock_gradients(rng, kind):
    params, buffers = _res_params(rng, 4, 4, 2, kind)
    x = 0.5 * rng.normal(size=(2, 4, 6))
    r = rng.normal(size=x.shape)

    def forward():
        return res_block_forward(x, params, {k: v.copy() for k, v in buffers.items()}, kind, ForwardMode.TRAIN)

    def loss():
        return float(np.sum(forward()[0] * r))

    _, cache = forward()
    assert cache["z"].min() > 0 and cache["f1"].min() > 0
    dx, grads = res_block_backward(r, cache)
    assert set(grads) == set(params)
    assert_close_grad(dx, loss, x, "x")
    for name in params:
        assert_close_grad(grads[name], loss, params[name], name)


# ===============================================================================
# Classifier, softmax and loss
# ===============================================================================

def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(4)), [0.25] * 4)
    p = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-300)
    logits = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(softmax(logits), np.exp(logits) / np.exp(logits).sum(), rtol=1e-14)


def test_softmax_invariants(rng):
    for _ in range(200):
        logits = rng.normal(scale=20, size=(3, 6))
        p = softmax(logits)
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
        np.testing.assert_allclose(softmax(logits + rng.normal() * 50), p, atol=1e-12)


def test_cross_entropy_examples():
    assert cross_entropy_loss(np.array([0.0, 1.0, 0.0, 0.0]), 1) == 0.0
    assert cross_entropy_loss(np.full(4, 0.25), 2) == pytest.approx(np.log(4))
    p = np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3]])
    assert cross_entropy_loss(p, np.array([0, 2])) == pytest.approx((-np.log(0.7) - np.log(0.3)) / 2)
    # clamped, not infinite
    assert np.isfinite(cross_entropy_loss(np.array([1.0, 0.0]), 1))
    with pytest.raises(ValueError):
        cross_entropy_loss(np.full(4, 0.25), 4)


def test_softmax_cross_entropy_gradient(rng):
    logits = rng.normal(size=(3, 4))
    labels = np.array([0, 3, 1])

    def loss():
        return cross_entropy_loss(softmax(logits), labels)

    assert_close_grad(softmax_cross_entropy_backward(softmax(logits), labels), loss, logits, "logits")


def test_classifier_examples(rng):
    features = np.repeat(np.array([[1.0], [2.0], [-3.0]]), 5, axis=1)
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=4)
    logits, cache = classifier_forward(features, w, b)
    np.testing.assert_allclose(cache["pooled"][0], [1.0, 2.0, -3.0])
    np.testing.assert_allclose(logits, w @ np.array([1.0, 2.0, -3.0]) + b)
    zero_logits, _ = classifier_forward(rng.normal(size=(2, 3, 5)), np.zeros((4, 3)), b)
    np.testing.assert_array_equal(zero_logits, np.tile(b, (2, 1)))


def test_classifier_gradients(rng):
    feats = rng.normal(size=(2, 3, 5))
    w, b = rng.normal(size=(4, 3)), rng.normal(size=4)
    r = rng.normal(size=(2, 4))

    def loss():
        return float(np.sum(classifier_forward(feats, w, b)[0] * r))

    _, cache = classifier_forward(feats, w, b)
    dfeat, dw, db = classifier_backward(r, cache)
    assert_close_grad(dfeat, loss, feats, "features")
    assert_close_grad(dw, loss, w, "w")
    assert_close_grad(db, loss, b, "b")
