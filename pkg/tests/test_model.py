import math

import numpy as np
import pytest

import oracles
from mmdnet.data import rotate, rotation_matrix
from mmdnet.model import (
    ChannelBatch,
    Layer,
    ModelParams,
    backward,
    forward,
    init_params,
    linear_params,
    load_checkpoint,
    n_channel_forward,
    save_checkpoint,
)


def _mlp(seed=0, activation="tanh", bias=True):
    return init_params(4, 3, hidden=(5, 6), seed=seed, activation=activation, bias=bias)


def _as_oracle_layers(params):
    return [(l.weight.tolist(), None if l.bias is None else l.bias.tolist(), l.activation) for l in params.layers]


def test_linear_init_shape():
    p = init_params(3, 3, [], seed=1)
    assert len(p.layers) == 1
    assert p.layers[0].weight.shape == (3, 3)
    assert p.layers[0].activation == "identity"
    assert p.is_linear


def test_init_deterministic():
    a, b = _mlp(seed=5), _mlp(seed=5)
    for x, y in zip(a.arrays(), b.arrays()):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(a.flat(), _mlp(seed=6).flat())


def test_init_weight_scale():
    w = init_params(30, 30, [], seed=7).layers[0].weight
    assert w.std() == pytest.approx(1 / math.sqrt(30), rel=0.1)


def test_hidden_layers_use_activation_output_is_identity():
    p = _mlp(activation="relu")
    assert [l.activation for l in p.layers] == ["relu", "relu", "identity"]
    assert np.all(p.layers[0].bias == 0)


def test_bad_layers_rejected():
    with pytest.raises(ValueError, match="activation"):
        Layer(np.eye(2), None, "sigmoid")
    with pytest.raises(ValueError, match="bias"):
        Layer(np.eye(2), np.zeros(3))
    with pytest.raises(ValueError):
        ModelParams([Layer(np.eye(2), None), Layer(np.eye(3), None)])


def test_forward_identity():
    X = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_array_equal(forward(linear_params(np.eye(3), np.zeros(3)), X), X)


def test_forward_affine():
    rng = np.random.default_rng(1)
    W, b, X = rng.normal(size=(2, 3)), rng.normal(size=2), rng.normal(size=(5, 3))
    np.testing.assert_allclose(forward(linear_params(W, b), X), X @ W.T + b, rtol=1e-15)


@pytest.mark.parametrize("activation", ["tanh", "relu", "identity"])
def test_forward_matches_loop_oracle(activation):
    p = _mlp(seed=2, activation=activation)
    X = np.random.default_rng(2).normal(size=(3, 4))
    ref = [oracles.mlp_forward(_as_oracle_layers(p), x) for x in X.tolist()]
    np.testing.assert_allclose(forward(p, X), ref, rtol=1e-12, atol=1e-14)


def test_forward_rejects_wrong_width():
    with pytest.raises(ValueError, match="shape"):
        forward(_mlp(), np.zeros((2, 3)))


def test_rotation_layer_matches_toy_rotation():
    pts = np.random.default_rng(3).uniform(-0.5, 0.5, size=(10, 2))
    p = linear_params(rotation_matrix(255.0))
    np.testing.assert_allclose(forward(p, pts), rotate(pts, 255.0), rtol=1e-15)


def test_n_channel_single_and_tied():
    p = _mlp()
    X = np.random.default_rng(4).normal(size=(5, 4))
    (only,) = n_channel_forward(p, ChannelBatch([X]))
    np.testing.assert_array_equal(only, forward(p, X))
    a, b = n_channel_forward(p, ChannelBatch([X, X.copy()]))
    np.testing.assert_array_equal(a, b)


def test_n_channel_equals_concatenated_forward():
    p = _mlp()
    rng = np.random.default_rng(5)
    chans = [rng.normal(size=(n, 4)) for n in (2, 7, 3)]
    outs = n_channel_forward(p, ChannelBatch(chans))
    joined = forward(p, np.vstack(chans))
    np.testing.assert_allclose(np.vstack(outs), joined, rtol=1e-14)


def test_channel_batch_checks_width():
    with pytest.raises(ValueError):
        ChannelBatch([np.zeros((2, 3)), np.zeros((2, 4))])
    with pytest.raises(ValueError):
        ChannelBatch([])


def test_backward_zero_upstream():
    p = _mlp()
    X = np.random.default_rng(6).normal(size=(3, 4))
    grads, gx = backward(p, X, np.zeros((3, 3)))
    assert all(np.all(g == 0) for g in grads.arrays())
    assert np.all(gx == 0)


def test_backward_linear_weight_grad():
    rng = np.random.default_rng(7)
    W, X, U = rng.normal(size=(2, 3)), rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    grads, gx = backward(linear_params(W, np.zeros(2)), X, U)
    np.testing.assert_allclose(grads.layers[0].weight, U.T @ X, rtol=1e-14)
    np.testing.assert_allclose(grads.layers[0].bias, U.sum(axis=0), rtol=1e-14)
    np.testing.assert_allclose(gx, U @ W, rtol=1e-14)


@pytest.mark.parametrize("activation,bias", [("tanh", True), ("tanh", False), ("identity", True)])
def test_backward_matches_finite_differences(activation, bias):
    p = _mlp(seed=8, activation=activation, bias=bias)
    rng = np.random.default_rng(8)
    X, U = rng.normal(size=(5, 4)), rng.normal(size=(5, 3))
    grads, gx = backward(p, X, U)
    fd = oracles.central_difference(lambda v: float(np.sum(U * forward(p.from_flat(v), X))), p.flat())
    assert oracles.max_relative_error(grads.flat(), fd) < 1e-5
    fdx = oracles.central_difference(lambda Z: float(np.sum(U * forward(p, Z))), X)
    assert oracles.max_relative_error(gx, fdx) < 1e-5


def test_flat_round_trip():
    p = _mlp()
    q = p.from_flat(p.flat())
    np.testing.assert_array_equal(q.flat(), p.flat())
    with pytest.raises(ValueError):
        p.from_flat(np.zeros(3))


def test_checkpoint_round_trip_is_exact(tmp_path):
    p = _mlp(seed=9, bias=False)
    p = p.from_flat(p.flat() * math.pi)
    save_checkpoint(p, tmp_path / "ck.json")
    q = load_checkpoint(tmp_path / "ck.json")
    assert [l.activation for l in q.layers] == [l.activation for l in p.layers]
    assert all(l.bias is None for l in q.layers)
    np.testing.assert_array_equal(q.flat(), p.flat())


def test_checkpoint_rejects_foreign_file(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(tmp_path / "x.json")
