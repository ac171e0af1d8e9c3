"""Minibatch sampling, RMSProp, and the two-phase training schedule.

Training runs a supervised pre-initialisation on the paired set (alignment
loss only) followed by joint training on the blended loss. Each joint step
draws one paired batch and, independently, one source and one target batch.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernel import KernelSpec
from .loss import BlendConfig, alignment_loss_and_grad, blended_loss_and_grad
from .model import ModelParams

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "phase", "alignment_loss", "mmd_loss", "blended_loss", "validation_metric")


@dataclass(frozen=True)
class TrainConfig:
    alpha_pair: float = 0.01
    batch_paired: int = 200
    batch_unpaired: int = 200
    learning_rate: float = 1e-3
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8
    epochs_pretrain: int = 4000
    epochs_joint: int = 250
    seed: int = 0
    validation_fraction: float = 0.0
    early_stop_patience: int = 0  # 0 disables early stopping

    def __post_init__(self):
        if not 0.0 <= self.alpha_pair <= 1.0:
            raise ValueError(f"alpha_pair must lie in [0, 1], got {self.alpha_pair}")
        if self.batch_paired < 1:
            raise ValueError("batch_paired must be at least 1")
        if self.batch_unpaired < 2:
            raise ValueError("batch_unpaired must be at least 2 for the MMD estimator")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.rms_decay < 1.0:
            raise ValueError("rms_decay must lie in (0, 1)")
        if not self.rms_epsilon > 0:
            raise ValueError("rms_epsilon must be positive")
        if self.epochs_pretrain < 0 or self.epochs_joint < 0:
            raise ValueError("epoch counts must be nonnegative")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.early_stop_patience < 0:
            raise ValueError("early_stop_patience must be nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    phase: str
    alignment_loss: float
    mmd_loss: float
    blended_loss: float
    validation_metric: float = float("nan")


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord):
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError("epochs must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def extend(self, other: TrainHistory):
        for r in other.records:
            self.append(r)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for r in self.records:
            writer.writerow([r.epoch, r.phase] + [repr(float(getattr(r, c))) for c in HISTORY_COLUMNS[2:]])
        return buf.getvalue()


@dataclass
class RmsState:
    mean_square: ModelParams

    @classmethod
    def zeros(cls, params: ModelParams) -> RmsState:
        return cls(params.zeros_like())


def sample_paired_batch(Xp, Yp, size: int, rng: np.random.Generator):
    """Rows at the same random indices of ``Xp`` and ``Yp``.

    Indices are distinct within a batch. If ``size`` covers the whole set the
    batch is a permutation of it.
    """
    k = Xp.shape[0]
    if Yp.shape[0] != k:
        raise ValueError(f"paired sets differ in length: {k} vs {Yp.shape[0]}")
    if k == 0:
        raise ValueError("cannot sample from an empty paired set")
    if size >= k:
        idx = rng.permutation(k)
    else:
        idx = rng.choice(k, size=size, replace=False)
    return Xp[idx], Yp[idx]


def _draw(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(n, size=size, replace=size > n)


def sample_unpaired_batches(S, T, size: int, rng: np.random.Generator):
    """Independent batches from the source and target pools.

    A pool smaller than ``size`` is sampled with replacement.
    """
    if size < 2:
        raise ValueError("unpaired batches need at least 2 rows")
    if len(S) == 0 or len(T) == 0:
        raise ValueError("cannot sample from an empty pool")
    return S[_draw(len(S), size, rng)], T[_draw(len(T), size, rng)]


def rmsprop_step(params: ModelParams, grads: ModelParams, state: RmsState, cfg: TrainConfig):
    """One RMSProp update; returns new params and new state."""
    rho, lr, eps = cfg.rms_decay, cfg.learning_rate, cfg.rms_epsilon
    new_p, new_s = [], []
    for p, g, s in zip(params.arrays(), grads.arrays(), state.mean_square.arrays()):
        if p.shape != g.shape or p.shape != s.shape:
            raise ValueError(f"shape mismatch in optimizer step: {p.shape}, {g.shape}, {s.shape}")
        s2 = rho * s + (1.0 - rho) * (g * g)
        new_s.append(s2)
        new_p.append(p - lr * g / np.sqrt(s2 + eps))
    return params.with_arrays(new_p), RmsState(params.with_arrays(new_s))


def _finite_or_raise(value: float, where: str):
    if not math.isfinite(value):
        raise FloatingPointError(f"non-finite loss during {where}")


def _paired_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1])


def _unpaired_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 2])


def _run_pretrain(params, Xp, Yp, cfg, mode, state, rng, history, first_epoch, validate):
    steps = math.ceil(Xp.shape[0] / cfg.batch_paired)
    for e in range(cfg.epochs_pretrain):
        total = 0.0
        for _ in range(steps):
            xb, yb = sample_paired_batch(Xp, Yp, cfg.batch_paired, rng)
            value, grads = alignment_loss_and_grad(params, xb, yb, mode)
            _finite_or_raise(value, "pre-training")
            params, state = rmsprop_step(params, grads, state, cfg)
            total += value
        mean = total / steps
        history.append(EpochRecord(first_epoch + e, "pretrain", mean, float("nan"), mean, validate(params)))
    return params, state


def pretrain(params: ModelParams, Xp, Yp, cfg: TrainConfig, alignment_mode: str = "mean_squared",
             validate: Callable[[ModelParams], float] | None = None):
    """Supervised pre-initialisation: RMSProp on the alignment loss alone.

    One epoch is enough paired batches to cover the paired set once.

    Returns:
        ``(params, history)``.
    """
    Xp, Yp = np.asarray(Xp, dtype=np.float64), np.asarray(Yp, dtype=np.float64)
    if cfg.epochs_pretrain > 0 and Xp.shape[0] == 0:
        raise ValueError("pre-training needs at least one pair")
    history = TrainHistory()
    params, _ = _run_pretrain(params, Xp, Yp, cfg, alignment_mode, RmsState.zeros(params),
                              _paired_rng(cfg.seed), history, 1, validate or _no_validation)
    return params, history


def _no_validation(params) -> float:
    return float("nan")


def validation_mse(Xv, Yv) -> Callable[[ModelParams], float]:
    """Validation metric: mean squared error per coordinate on held-out pairs."""
    from .model import forward

    def metric(params):
        return float(np.mean((forward(params, Xv) - Yv) ** 2))

    return metric


def train(
    params: ModelParams,
    Xp,
    Yp,
    S,
    T,
    spec: KernelSpec,
    cfg: TrainConfig,
    blend: BlendConfig | None = None,
    validate: Callable[[ModelParams], float] | None = None,
    higher_is_better: bool = False,
):
    """Pre-train on the pairs, then train on the blended loss.

    Args:
        params: Starting network.
        Xp, Yp: Row-aligned paired sets.
        S, T: Unpaired source and target pools.
        spec: Kernel for the MMD term.
        cfg: Schedule and optimizer settings.
        blend: Loss blend; defaults to ``BlendConfig(cfg.alpha_pair)``.
        validate: Optional metric evaluated after each epoch. When omitted and
            ``cfg.validation_fraction > 0``, that fraction of the pairs is held
            out and scored by mean squared error.
        higher_is_better: Direction of ``validate``, used by early stopping.

    Returns:
        ``(params, history)``. With early stopping enabled the returned
        parameters are those of the best validation epoch of the joint phase.
    """
    blend = blend or BlendConfig(cfg.alpha_pair)
    Xp = np.asarray(Xp, dtype=np.float64)
    Yp = np.asarray(Yp, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)

    if validate is None and cfg.validation_fraction > 0:
        from .data import train_val_split

        train_idx, val_idx = train_val_split(np.arange(Xp.shape[0]), cfg.validation_fraction, cfg.seed)
        if len(val_idx):
            validate = validation_mse(Xp[val_idx], Yp[val_idx])
            Xp, Yp = Xp[train_idx], Yp[train_idx]
    validate = validate or _no_validation

    if cfg.epochs_pretrain > 0 and Xp.shape[0] == 0:
        raise ValueError("pre-training needs at least one pair")
    if cfg.epochs_joint > 0 and blend.alpha_pair > 0 and Xp.shape[0] == 0:
        raise ValueError("the alignment term needs at least one pair")

    history = TrainHistory()
    state = RmsState.zeros(params)
    paired_rng = _paired_rng(cfg.seed)
    unpaired_rng = _unpaired_rng(cfg.seed)

    params, state = _run_pretrain(params, Xp, Yp, cfg, blend.alignment_mode, state, paired_rng,
                                  history, 1, validate)

    steps = math.ceil(max(len(S), len(T)) / cfg.batch_unpaired)
    a = blend.alpha_pair
    best = None
    since_best = 0
    for e in range(cfg.epochs_joint):
        sums = np.zeros(3)
        for _ in range(steps):
            if a > 0.0:
                xb, yb = sample_paired_batch(Xp, Yp, cfg.batch_paired, paired_rng)
            else:
                xb = yb = None
            if a < 1.0:
                sb, tb = sample_unpaired_batches(S, T, cfg.batch_unpaired, unpaired_rng)
            else:
                sb = tb = None
            terms, grads = blended_loss_and_grad(params, xb, yb, sb, tb, spec, blend)
            _finite_or_raise(terms.blended, "joint training")
            params, state = rmsprop_step(params, grads, state, cfg)
            sums += (terms.alignment, terms.mmd, terms.blended)
        align, mmd, blended = sums / steps
        metric = validate(params)
        history.append(EpochRecord(cfg.epochs_pretrain + e + 1, "joint", align, mmd, blended, metric))

        if cfg.early_stop_patience and math.isfinite(metric):
            score = -metric if higher_is_better else metric
            if best is None or score < best[0]:
                best, since_best = (score, params), 0
            else:
                since_best += 1
                if since_best >= cfg.early_stop_patience:
                    log.info("early stop after joint epoch %d", e + 1)
                    break
    if best is not None:
        params = best[1]
    return params, history
