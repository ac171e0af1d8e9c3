"""Supervised alignment loss, MMD loss and their blend, with exact gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import KernelSpec, mmd_u2, mmd_u2_and_grad
from .model import ModelParams, backward, forward

ALIGNMENT_MODES = ("mean_squared", "sum_l2")


@dataclass(frozen=True)
class BlendConfig:
    """How much weight the paired term gets, and which form it takes.

    ``mean_squared`` averages squared residual norms over the paired batch;
    ``sum_l2`` sums plain residual norms.
    """

    alpha_pair: float = 0.01
    alignment_mode: str = "mean_squared"

    def __post_init__(self):
        if not 0.0 <= self.alpha_pair <= 1.0:
            raise ValueError(f"alpha_pair must lie in [0, 1], got {self.alpha_pair}")
        if self.alignment_mode not in ALIGNMENT_MODES:
            raise ValueError(
                f"unknown alignment mode {self.alignment_mode!r}; expected one of {ALIGNMENT_MODES}"
            )


def _residuals(params, Xp, Yp):
    Xp = np.asarray(Xp, dtype=np.float64)
    Yp = np.asarray(Yp, dtype=np.float64)
    if Xp.shape[0] != Yp.shape[0]:
        raise ValueError(f"paired sets differ in length: {Xp.shape[0]} vs {Yp.shape[0]}")
    if Xp.shape[0] < 1:
        raise ValueError("the alignment loss needs at least one pair")
    out = forward(params, Xp)
    if out.shape != Yp.shape:
        raise ValueError(f"network output {out.shape} does not match targets {Yp.shape}")
    return Xp, out - Yp


def alignment_loss(params: ModelParams, Xp, Yp, mode: str = "mean_squared") -> float:
    _, r = _residuals(params, Xp, Yp)
    if mode == "mean_squared":
        return float(np.mean(np.sum(r * r, axis=1)))
    if mode == "sum_l2":
        return float(np.sum(np.sqrt(np.sum(r * r, axis=1))))
    raise ValueError(f"unknown alignment mode {mode!r}")


def alignment_loss_and_grad(params: ModelParams, Xp, Yp, mode: str = "mean_squared"):
    Xp, r = _residuals(params, Xp, Yp)
    if mode == "mean_squared":
        value = float(np.mean(np.sum(r * r, axis=1)))
        upstream = (2.0 / r.shape[0]) * r
    elif mode == "sum_l2":
        norms = np.sqrt(np.sum(r * r, axis=1))
        value = float(np.sum(norms))
        # The norm is not differentiable at zero; use the zero subgradient there.
        safe = np.where(norms > 0, norms, 1.0)
        upstream = np.where(norms[:, None] > 0, r / safe[:, None], 0.0)
    else:
        raise ValueError(f"unknown alignment mode {mode!r}")
    return value, backward(params, Xp, upstream)[0]


def mmd_loss(params: ModelParams, S_batch, T_batch, spec: KernelSpec) -> float:
    """Unbiased squared MMD between the mapped source batch and the target batch."""
    return mmd_u2(forward(params, S_batch), T_batch, spec)


def mmd_loss_and_grad(params: ModelParams, S_batch, T_batch, spec: KernelSpec):
    S_batch = np.asarray(S_batch, dtype=np.float64)
    mapped = forward(params, S_batch)
    value, upstream = mmd_u2_and_grad(mapped, T_batch, spec)
    return value, backward(params, S_batch, upstream)[0]


def blended_loss(params, Xp, Yp, S_batch, T_batch, spec: KernelSpec, blend: BlendConfig) -> float:
    a = blend.alpha_pair
    if a == 1.0:
        return alignment_loss(params, Xp, Yp, blend.alignment_mode)
    if a == 0.0:
        return mmd_loss(params, S_batch, T_batch, spec)
    return a * alignment_loss(params, Xp, Yp, blend.alignment_mode) + (1.0 - a) * mmd_loss(
        params, S_batch, T_batch, spec
    )


@dataclass
class LossTerms:
    """Per-step loss readout; a term that was not evaluated is NaN."""

    alignment: float
    mmd: float
    blended: float


def blended_loss_and_grad(params, Xp, Yp, S_batch, T_batch, spec, blend: BlendConfig):
    """Blended loss terms and the exact parameter gradient.

    A term whose weight is zero is skipped entirely: with ``alpha_pair == 1``
    no kernel is evaluated and with ``alpha_pair == 0`` the paired batch is
    not read (``Xp``/``Yp`` may then be ``None``).
    """
    a = blend.alpha_pair
    align_value = mmd_value = float("nan")
    grads = None
    if a > 0.0:
        align_value, g_align = alignment_loss_and_grad(params, Xp, Yp, blend.alignment_mode)
        grads = g_align if a == 1.0 else [a * g for g in g_align.arrays()]
    if a < 1.0:
        mmd_value, g_mmd = mmd_loss_and_grad(params, S_batch, T_batch, spec)
        scaled = [(1.0 - a) * g for g in g_mmd.arrays()]
        grads = params.with_arrays(scaled if grads is None else [g1 + g2 for g1, g2 in zip(grads, scaled)])
    if a == 1.0:
        blended = align_value
    elif a == 0.0:
        blended = mmd_value
    else:
        blended = a * align_value + (1.0 - a) * mmd_value
    return LossTerms(align_value, mmd_value, blended), grads


def blended_loss_grad(params, Xp, Yp, S_batch, T_batch, spec, blend: BlendConfig) -> ModelParams:
    """Gradient of :func:`blended_loss` with respect to every parameter."""
    return blended_loss_and_grad(params, Xp, Yp, S_batch, T_batch, spec, blend)[1]
