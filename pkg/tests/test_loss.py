import math

import numpy as np
import pytest

import oracles
from mmdnet.kernel import KernelSpec, mmd_u2
from mmdnet.loss import (
    BlendConfig,
    alignment_loss,
    alignment_loss_and_grad,
    blended_loss,
    blended_loss_and_grad,
    blended_loss_grad,
    mmd_loss,
    mmd_loss_and_grad,
)
from mmdnet.model import forward, init_params, linear_params

SPEC = KernelSpec(base_scale=1.5)


@pytest.fixture
def batch():
    rng = np.random.default_rng(0)
    return dict(
        Xp=rng.normal(size=(6, 5)),
        Yp=rng.normal(size=(6, 5)),
        S=rng.normal(size=(9, 5)),
        T=rng.normal(0.3, 1.1, size=(8, 5)),
    )


def test_alignment_identity_is_zero():
    X = np.random.default_rng(1).normal(size=(4, 3))
    assert alignment_loss(linear_params(np.eye(3)), X, X) == 0.0


def test_alignment_sum_l2_three_four_five():
    p = linear_params(np.eye(2), np.array([3.0, 4.0]))
    assert alignment_loss(p, [[0.0, 0.0]], [[0.0, 0.0]], "sum_l2") == 5.0
    assert alignment_loss(p, [[0.0, 0.0]], [[0.0, 0.0]]) == 25.0


def test_alignment_matches_per_row_oracle(batch):
    p = init_params(5, 5, (4,), seed=2)
    out = forward(p, batch["Xp"])
    rows = [sum((a - b) ** 2 for a, b in zip(o, y)) for o, y in zip(out.tolist(), batch["Yp"].tolist())]
    assert alignment_loss(p, batch["Xp"], batch["Yp"]) == pytest.approx(sum(rows) / len(rows), rel=1e-13)
    assert alignment_loss(p, batch["Xp"], batch["Yp"], "sum_l2") == pytest.approx(
        sum(math.sqrt(r) for r in rows), rel=1e-13)


def test_alignment_errors():
    p = linear_params(np.eye(2))
    with pytest.raises(ValueError, match="mode"):
        alignment_loss(p, [[0, 0]], [[0, 0]], "huber")
    with pytest.raises(ValueError):
        alignment_loss(p, [[0, 0]], [[0, 0, 0]])


def test_sum_l2_subgradient_is_zero_at_exact_fit():
    X = np.random.default_rng(3).normal(size=(3, 2))
    _, g = alignment_loss_and_grad(linear_params(np.eye(2), np.zeros(2)), X, X, "sum_l2")
    assert all(np.all(a == 0) for a in g.arrays())


def test_mmd_loss_identity_network_hand_case():
    a, b = [0.0, 0.0], [1.0, 0.0]
    X = np.array([a, b])
    value = mmd_loss(linear_params(np.eye(2)), X, X.copy(), KernelSpec.single(1.0))
    assert value == pytest.approx(math.exp(-0.5) - 1.0, rel=1e-14)


def test_mmd_loss_far_from_target_drops_cross_term():
    rng = np.random.default_rng(4)
    S, T = rng.normal(size=(5, 2)), rng.normal(size=(6, 2))
    p = linear_params(np.eye(2), np.array([1e6, 0.0]))
    spec = KernelSpec()
    sig = spec.scales.tolist()
    mapped = (S + [1e6, 0.0]).tolist()

    def within(Z):
        n = len(Z)
        return sum(oracles.multiscale(Z[i], Z[j], sig, spec.coefficients)
                   for i in range(n) for j in range(n) if i != j) / (n * (n - 1))

    expected = within(mapped) + within(T.tolist())
    assert mmd_loss(p, S, T, spec) == pytest.approx(expected, rel=1e-10)


def test_mmd_loss_symmetric_in_mapped_and_target():
    rng = np.random.default_rng(5)
    S, T = rng.normal(size=(5, 2)), rng.normal(size=(6, 2))
    p = init_params(2, 2, seed=5)
    assert mmd_loss(p, S, T, SPEC) == mmd_u2(T, forward(p, S), SPEC)


def test_blend_config_validation():
    with pytest.raises(ValueError):
        BlendConfig(alpha_pair=1.5)
    with pytest.raises(ValueError):
        BlendConfig(alignment_mode="l1")


def test_blend_boundaries(batch):
    p = init_params(5, 5, seed=6)
    args = (batch["Xp"], batch["Yp"], batch["S"], batch["T"], SPEC)
    a = alignment_loss(p, batch["Xp"], batch["Yp"])
    m = mmd_loss(p, batch["S"], batch["T"], SPEC)
    assert blended_loss(p, *args, BlendConfig(1.0)) == a
    assert blended_loss(p, *args, BlendConfig(0.0)) == m
    assert blended_loss(p, *args, BlendConfig(0.5)) == pytest.approx((a + m) / 2, rel=1e-15)


def test_blend_terms_report_skipped_parts_as_nan(batch):
    p = init_params(5, 5, seed=6)
    terms, _ = blended_loss_and_grad(p, batch["Xp"], batch["Yp"], None, None, SPEC, BlendConfig(1.0))
    assert math.isnan(terms.mmd) and terms.blended == terms.alignment
    terms, _ = blended_loss_and_grad(p, None, None, batch["S"], batch["T"], SPEC, BlendConfig(0.0))
    assert math.isnan(terms.alignment) and terms.blended == terms.mmd


def test_alpha_one_linear_is_least_squares_gradient(batch):
    rng = np.random.default_rng(7)
    W, b = rng.normal(size=(5, 5)), rng.normal(size=5)
    X, Y = batch["Xp"], batch["Yp"]
    g = blended_loss_grad(linear_params(W, b), X, Y, None, None, SPEC, BlendConfig(1.0))
    R = X @ W.T + b - Y
    np.testing.assert_allclose(g.layers[0].weight, 2.0 / len(X) * R.T @ X, rtol=1e-13)
    np.testing.assert_allclose(g.layers[0].bias, 2.0 / len(X) * R.sum(axis=0), rtol=1e-13)


def test_zero_gradient_at_noiseless_truth():
    rng = np.random.default_rng(8)
    W = rng.normal(size=(3, 3))
    X = rng.normal(size=(10, 3))
    g = blended_loss_grad(linear_params(W), X, X @ W.T, None, None, SPEC, BlendConfig(1.0))
    assert np.abs(g.flat()).max() < 1e-12


@pytest.mark.parametrize("alpha", [0.0, 0.01, 0.5, 1.0])
@pytest.mark.parametrize("hidden", [(), (4,)])
@pytest.mark.parametrize("mode", ["mean_squared", "sum_l2"])
def test_blended_grad_matches_finite_differences(batch, alpha, hidden, mode):
    p = init_params(5, 5, hidden, seed=9)
    blend = BlendConfig(alpha, mode)
    args = (batch["Xp"], batch["Yp"], batch["S"], batch["T"], SPEC, blend)
    g = blended_loss_grad(p, *args)
    fd = oracles.central_difference(lambda v: blended_loss(p.from_flat(v), *args), p.flat())
    assert oracles.max_relative_error(g.flat(), fd, floor=1e-6) < 1e-4


def test_mmd_grad_value_consistent(batch):
    p = init_params(5, 5, (3,), seed=10)
    v, _ = mmd_loss_and_grad(p, batch["S"], batch["T"], SPEC)
    assert v == pytest.approx(mmd_loss(p, batch["S"], batch["T"], SPEC), rel=1e-12)
