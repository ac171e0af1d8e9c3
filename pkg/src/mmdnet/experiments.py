"""Experiment runners behind the command-line tools.

Each runner takes a :class:`~mmdnet.config.RunConfig` and returns plain
results; writing files is left to :mod:`mmdnet.cli`.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, RunConfig
from .data import (
    build_splits,
    gen_rotation_toy,
    gen_synthetic,
    load_embeddings,
    load_lexicon,
    rotate,
    sample_linear_rows,
    train_val_split,
)
from .kernel import KernelSpec, mmd_u2
from .model import ModelParams, forward, init_params, linear_params
from .retrieval import GcPool, RetrievalIndex, retrieve
from .train import TrainHistory, pretrain, train, validation_mse

SYNTH_COLUMNS = ("method", "d", "num_paired", "test_mse", "alpha_pair", "validation_mse")
TOY_COLUMNS = ("theta", "mmd_scaled", "mse_scaled", "mmd", "mse")
POINT_COLUMNS = ("index", "source_x", "source_y", "target_x", "target_y")
EVAL_COLUMNS = ("bin", "method", "N", "precision", "num_pairs", "model")


def fit_least_squares(X, Y, bias: bool = True) -> ModelParams:
    """Ordinary least-squares linear map as a one-layer network."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    A = np.hstack([X, np.ones((X.shape[0], 1))]) if bias else X
    coef = np.linalg.lstsq(A, Y, rcond=None)[0]
    if bias:
        return linear_params(coef[:-1].T, coef[-1])
    return linear_params(coef.T)


def mse(params: ModelParams, X, Y) -> float:
    """Mean squared error per output coordinate."""
    return float(np.mean((forward(params, X) - Y) ** 2))


def _no_validation(params) -> float:
    return float("nan")


def _model_for(cfg: RunConfig, d_in: int, d_out: int) -> ModelParams:
    return init_params(d_in, d_out, cfg["model.hidden"], seed=cfg["run.seed"],
                       activation=cfg["model.activation"], bias=cfg["model.bias"])


@dataclass
class RunResult:
    rows: list[tuple]
    validation_metric: float
    test_metric: float
    higher_is_better: bool
    history: TrainHistory = field(default_factory=TrainHistory)
    params: ModelParams | None = None


def run_synth(cfg: RunConfig) -> RunResult:
    """Linear-map recovery on synthetic Gaussian data.

    Compares least squares on the paired subset, the pre-trained network, the
    MMD-blended network (one row per blend weight) and least squares on every
    pool pair. A labelled validation set of ``validation_fraction * N`` extra
    rows scores the MMD model for hyper-parameter selection.
    """
    d, n_pool, k = cfg["synth.dim"], cfg["synth.num_points"], cfg["synth.num_paired"]
    noise = cfg["synth.noise_sigma"]
    task_seed = cfg["synth.task_seed"]
    task = gen_synthetic(d, n_pool, noise, k, task_seed)
    rng = np.random.default_rng([task_seed, 7])
    n_val = int(math.floor(cfg["train.validation_fraction"] * n_pool + 0.5))
    Xv, Yv = sample_linear_rows(task.ground_truth, n_val, noise, rng)
    Xt, Yt = sample_linear_rows(task.ground_truth, cfg["synth.num_test"], noise, rng)
    Xp, Yp = task.paired
    bias = cfg["model.bias"]
    # The runner owns validation; train() must never carve it out of the pairs.
    validate = validation_mse(Xv, Yv) if n_val else _no_validation
    spec = cfg.kernel_spec()
    tcfg = cfg.train_config()

    def val(p):
        return mse(p, Xv, Yv) if n_val else float("nan")

    rows = []
    if k:
        ls = fit_least_squares(Xp, Yp, bias)
        rows.append(("paired_only", d, k, mse(ls, Xt, Yt), "", val(ls)))
        pre, _ = pretrain(_model_for(cfg, d, d), Xp, Yp, tcfg, cfg["loss.alignment_mode"], validate)
        rows.append(("pretrain_only", d, k, mse(pre, Xt, Yt), "", val(pre)))

    main = None
    for alpha in dict.fromkeys((cfg["loss.alpha_pair"], *cfg["synth.alpha_sweep"])):
        run_cfg = cfg.updated(loss__alpha_pair=alpha)
        params, history = train(_model_for(cfg, d, d), Xp, Yp, task.source, task.target, spec,
                                run_cfg.train_config(), run_cfg.blend_config(), validate)
        rows.append(("mmd", d, k, mse(params, Xt, Yt), alpha, val(params)))
        if main is None:
            main = (params, history, rows[-1])

    oracle = fit_least_squares(task.source, task.target, bias)
    rows.append(("oracle", d, n_pool, mse(oracle, Xt, Yt), "", val(oracle)))

    params, history, row = main
    return RunResult(rows, row[5], row[3], False, history, params)


def circular_local_minima(values) -> list[int]:
    """Indices strictly below both neighbours, treating the sequence as a ring."""
    v = np.asarray(values)
    left, right = np.roll(v, 1), np.roll(v, -1)
    return np.flatnonzero((v < left) & (v < right)).tolist()


def unit_scale(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    span = v.max() - v.min()
    return np.zeros_like(v) if span == 0 else (v - v.min()) / span


@dataclass
class ToyResult:
    thetas: np.ndarray
    mmd: np.ndarray
    mse: np.ndarray
    source: np.ndarray
    target: np.ndarray

    def rows(self):
        for t, ms, es, m, e in zip(self.thetas, unit_scale(self.mmd), unit_scale(self.mse), self.mmd, self.mse):
            yield float(t), float(ms), float(es), float(m), float(e)

    def point_rows(self):
        for i, (x, y) in enumerate(zip(self.source, self.target)):
            yield i, float(x[0]), float(x[1]), float(y[0]), float(y[1])


def run_toy_rotation(cfg: RunConfig) -> ToyResult:
    """Scan the MMD and the one-pair squared error over rotation angles."""
    task = gen_rotation_toy(cfg["toy.num_points"], cfg["toy.theta_star"], cfg["toy.noise_sigma"], cfg["run.seed"])
    spec = KernelSpec(cfg["toy.kernel_scale"], cfg["toy.kernel_width"], cfg["kernel.num_scales"],
                      cfg["kernel.coefficients"])
    thetas = np.arange(0.0, 360.0, cfg["toy.resolution"])
    X, Y = task.source, task.target
    mmd = np.array([mmd_u2(rotate(X, t), Y, spec) for t in thetas])
    err = np.array([float(np.mean((rotate(X[:1], t)[0] - Y[0]) ** 2)) for t in thetas])
    return ToyResult(thetas, mmd, err, X, Y)


def _top_lists(mapped, index, method, n_max, pool):
    return [retrieve(y, index, method, n_max, pool) for y in mapped]


def run_translate(cfg: RunConfig) -> RunResult:
    """Train on the most frequent dictionary words; evaluate by frequency bin."""
    for key in ("translate.source_embeddings", "translate.target_embeddings", "translate.lexicon"):
        if not cfg[key]:
            raise ConfigError(f"{key} must be set")
    src = load_embeddings(cfg["translate.source_embeddings"])
    tgt = load_embeddings(cfg["translate.target_embeddings"])
    lexicon = load_lexicon(cfg["translate.lexicon"], src, tgt)
    seed = cfg["run.seed"]
    size = cfg["translate.train_size"]
    train_sets, bins = build_splits(lexicon, src, (size,), cfg["translate.bin_edges"],
                                    cfg["translate.test_per_bin"], seed)
    gold = lexicon.translations()
    words = list(dict.fromkeys(s for s, _ in train_sets[size]))
    train_words, val_words = train_val_split(words, cfg["train.validation_fraction"], seed)
    train_set = set(train_words)
    train_pairs = [(s, t) for s, t in train_sets[size] if s in train_set]
    if not train_pairs:
        raise ValueError("no training pairs left after filtering the lexicon")
    Xp, Yp = src.rows([s for s, _ in train_pairs]), tgt.rows([t for _, t in train_pairs])
    limit = cfg["translate.max_unpaired"] or None
    S, T = src.vectors[:limit], tgt.vectors[:limit]

    validate = _no_validation
    if val_words:
        val_pairs = [(s, t) for s, t in train_sets[size] if s not in train_set]
        validate = validation_mse(src.rows([s for s, _ in val_pairs]), tgt.rows([t for _, t in val_pairs]))
    params, history = train(_model_for(cfg, src.dim, tgt.dim), Xp, Yp, S, T, cfg.kernel_spec(),
                            cfg.train_config(), cfg.blend_config(), validate)
    linear = fit_least_squares(Xp, Yp, cfg["model.bias"])

    index = RetrievalIndex(tgt.vectors, tgt.vocab)
    pool_size = cfg["translate.gc_pool_size"]
    pool = GcPool(index) if pool_size <= 0 else GcPool.random(index, pool_size, seed)
    n_values = sorted(set(cfg["translate.n_values"]))
    n_max = min(max(n_values), len(index))
    method = cfg["translate.method"]

    def hits(params_, entries, retrieval, n_list):
        mapped = forward(params_, src.rows([w for w, _ in entries]))
        tops = _top_lists(mapped, index, retrieval, n_max, pool)
        golds = [{tgt.index[t] for t in ts} for _, ts in entries]
        return {n: sum(bool(set(top[:n]) & g) for top, g in zip(tops, golds)) for n in n_list}

    rows = []
    test_metric = float("nan")
    for model_name, p in (("linear", linear), ("mmd", params)):
        for b in bins:
            for retrieval in ("nn", "gc"):
                counts = hits(p, b.entries, retrieval, n_values) if b.entries else {}
                for n in n_values:
                    prec = counts[n] / len(b.entries) if b.entries else float("nan")
                    rows.append((b.label, retrieval, n, prec, len(b.entries), model_name))
                    if (model_name == "mmd" and retrieval == method and n == n_values[0]
                            and math.isnan(test_metric) and b.entries):
                        test_metric = prec

    validation_metric = float("nan")
    if val_words:
        entries = [(w, gold[w]) for w in val_words]
        validation_metric = hits(params, entries, method, [1])[1] / len(entries)
    return RunResult(rows, validation_metric, test_metric, True, history, params)


RUNNERS = {"synth": run_synth, "translate": run_translate}


def _run_cell(command: str, config_text: str):
    result = RUNNERS[command](RunConfig.parse(config_text))
    return result.validation_metric, result.test_metric, result.higher_is_better


@dataclass
class SweepResult:
    keys: list[str]
    cells: list[tuple[str, ...]]
    validation: list[float]
    test: list[float]
    selected: int

    def rows(self):
        for i, (cell, v, t) in enumerate(zip(self.cells, self.validation, self.test)):
            yield (i, *cell, v, t, i == self.selected)


def select_cell(validation: list[float], higher_is_better: bool) -> int:
    """Best validation score, first cell on ties; NaN ranks last."""
    best, best_i = None, 0
    for i, v in enumerate(validation):
        if math.isnan(v):
            continue
        score = -v if higher_is_better else v
        if best is None or score < best:
            best, best_i = score, i
    return best_i


def run_sweep(cfg: RunConfig) -> SweepResult:
    """Run the cartesian grid of ``sweep.grid`` and pick the best validation cell."""
    command = cfg["sweep.command"]
    grid = cfg.grid()
    keys = [k for k, _ in grid]
    cells = list(itertools.product(*(vals for _, vals in grid)))
    texts = []
    for cell in cells:
        c = RunConfig(dict(cfg.values))
        for key, value in zip(keys, cell):
            c.set(key, value)
        c.validate()
        texts.append(c.to_text())
    jobs = min(cfg["sweep.jobs"], len(cells))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, [command] * len(cells), texts))
    else:
        results = [_run_cell(command, t) for t in texts]
    validation = [r[0] for r in results]
    test = [r[1] for r in results]
    higher = results[0][2] if results else False
    return SweepResult(keys, cells, validation, test, select_cell(validation, higher))

