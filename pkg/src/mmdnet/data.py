"""Synthetic tasks, embedding/dictionary files, and train/test splits.

Embedding files use the common word2vec text layout: a header line ``V e``
followed by ``V`` lines ``word v_1 ... v_e``. Row order is taken to be
frequency order, most frequent first. Dictionaries are ``source<TAB>target``
lines. Both are UTF-8.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_NOISE_STD = math.sqrt(0.1)
TOY_NOISE_STD = 0.1
DEFAULT_BIN_EDGES = (0, 5000, 20000, 50000, 100000, 200000)


class ParseError(ValueError):
    """A data file is malformed; the message names the file and line."""


@dataclass
class SyntheticTask:
    source: np.ndarray
    target: np.ndarray
    ground_truth: np.ndarray  # target ~= source @ ground_truth.T
    noise_sigma: float
    paired_indices: np.ndarray

    @property
    def paired(self) -> tuple[np.ndarray, np.ndarray]:
        return self.source[self.paired_indices], self.target[self.paired_indices]


def sample_linear_rows(ground_truth: np.ndarray, n: int, noise_sigma: float, rng: np.random.Generator):
    """Draw ``n`` standard-normal sources and their noisy images."""
    d = ground_truth.shape[1]
    x = rng.standard_normal((n, d))
    y = x @ ground_truth.T
    if noise_sigma > 0:
        y = y + rng.normal(0.0, noise_sigma, size=y.shape)
    return x, y


def gen_synthetic(d: int, N: int, noise_sigma: float = DEFAULT_NOISE_STD, num_paired: int = 0,
                  seed: int = 0) -> SyntheticTask:
    """Random linear map task.

    Sources and the entries of the ``d x d`` ground truth are standard normal;
    targets are mapped sources plus Gaussian noise with standard deviation
    ``noise_sigma`` (the default corresponds to a noise variance of 0.1).
    """
    if d < 1 or N < 1 or not 0 <= num_paired <= N:
        raise ValueError(f"invalid synthetic sizes d={d}, N={N}, num_paired={num_paired}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    ground_truth = rng.standard_normal((d, d))
    x, y = sample_linear_rows(ground_truth, N, noise_sigma, rng)
    paired = np.sort(rng.choice(N, size=num_paired, replace=False))
    return SyntheticTask(x, y, ground_truth, float(noise_sigma), paired)


def rotation_matrix(theta_degrees: float) -> np.ndarray:
    """Matrix of a clockwise rotation by ``theta_degrees`` (acting on column vectors)."""
    t = math.radians(theta_degrees)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def rotate(points: np.ndarray, theta_degrees: float) -> np.ndarray:
    """Rotate each row clockwise by ``theta_degrees``."""
    return points @ rotation_matrix(theta_degrees).T


def gen_rotation_toy(n_points: int, theta_star_degrees: float = 255.0, noise_sigma: float = TOY_NOISE_STD,
                     seed: int = 0) -> SyntheticTask:
    """Uniform points on the unit square centred at the origin, and a noisy rotated copy."""
    if n_points < 2:
        raise ValueError("need at least 2 points")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, size=(n_points, 2))
    y = rotate(x, theta_star_degrees)
    if noise_sigma > 0:
        y = y + rng.normal(0.0, noise_sigma, size=y.shape)
    return SyntheticTask(x, y, rotation_matrix(theta_star_degrees), float(noise_sigma), np.arange(n_points))


@dataclass
class EmbeddingTable:
    vocab: list[str]
    vectors: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError("vectors must have one row per vocabulary word")
        self.index = {}
        for i, w in enumerate(self.vocab):
            if w in self.index:
                raise ValueError(f"duplicate word {w!r}")
            self.index[w] = i

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, word):
        return word in self.index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def frequency_rank(self, word: str) -> int:
        """0-based position in the file, i.e. frequency rank."""
        return self.index[word]

    def rows(self, words: Sequence[str]) -> np.ndarray:
        return self.vectors[[self.index[w] for w in words]]


def load_embeddings(path) -> EmbeddingTable:
    path = Path(path)
    vocab, rows = [], []
    seen = set()
    with path.open(encoding="utf-8") as f:
        header = f.readline()
        parts = header.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"{path}:1: expected header 'V e', got {header.strip()!r}")
        count, dim = int(parts[0]), int(parts[1])
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.rstrip(" ").split(" ")
            if len(fields) != dim + 1:
                raise ParseError(f"{path}:{lineno}: expected {dim} values, got {len(fields) - 1}")
            word = fields[0]
            if word in seen:
                raise ParseError(f"{path}:{lineno}: duplicate word {word!r}")
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            seen.add(word)
            vocab.append(word)
            rows.append(values)
    if len(vocab) != count:
        raise ParseError(f"{path}: header declares {count} words, found {len(vocab)}")
    vectors = np.array(rows, dtype=np.float64).reshape(len(vocab), dim)
    return EmbeddingTable(vocab, vectors)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for word, vec in zip(table.vocab, table.vectors):
            f.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def task_tables(task: SyntheticTask) -> tuple[EmbeddingTable, EmbeddingTable]:
    """Synthetic source/target matrices as tables with integer-string vocabularies."""
    vocab = [str(i) for i in range(task.source.shape[0])]
    return EmbeddingTable(vocab, task.source), EmbeddingTable(list(vocab), task.target)


@dataclass
class Lexicon:
    pairs: list[tuple[str, str]]
    dropped: int = 0

    def __len__(self):
        return len(self.pairs)

    def translations(self) -> "OrderedDict[str, list[str]]":
        """Gold targets grouped by source word, in first-appearance order."""
        out: OrderedDict[str, list[str]] = OrderedDict()
        for s, t in self.pairs:
            out.setdefault(s, [])
            if t not in out[s]:
                out[s].append(t)
        return out


def load_lexicon(path, source_table: EmbeddingTable, target_table: EmbeddingTable) -> Lexicon:
    """Read a dictionary, dropping pairs with a word missing from either table."""
    path = Path(path)
    pairs, dropped = [], 0
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ParseError(f"{path}:{lineno}: expected 'source<TAB>target'")
            s, t = fields
            if s in source_table and t in target_table:
                pairs.append((s, t))
            else:
                dropped += 1
    if not pairs:
        log.warning("%s: lexicon is empty after filtering", path)
    if dropped:
        log.info("%s: dropped %d out-of-vocabulary pairs", path, dropped)
    return Lexicon(pairs, dropped)


@dataclass
class TestBin:
    __test__ = False  # not a pytest class

    lo: int
    hi: int
    entries: list[tuple[str, list[str]]]  # (source word, gold targets)
    short: bool = False  # fewer entries than requested were available

    @property
    def label(self) -> str:
        return f"{_k(self.lo)}-{_k(self.hi)}"


def _k(n: int) -> str:
    return f"{n // 1000}k" if n and n % 1000 == 0 else str(n)


def build_splits(lexicon: Lexicon, source_table: EmbeddingTable, train_sizes=(750, 5000),
                 bin_edges=DEFAULT_BIN_EDGES, test_per_bin: int = 400, seed: int = 0):
    """Frequency-based training sets and frequency-binned test sets.

    Training set ``n`` holds the ``n`` most frequent source words that have a
    translation, with all their gold pairs. Test bins draw source words by
    frequency rank interval ``[lo, hi)``, never reusing a training word.

    Returns:
        ``(train_sets, test_bins)`` where ``train_sets`` maps each size to a
        list of ``(source, target)`` pairs.
    """
    edges = list(bin_edges)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must be strictly ascending")
    by_source = lexicon.translations()
    ranked = sorted(by_source, key=source_table.frequency_rank)

    train_sets = {}
    for size in train_sizes:
        words = ranked[:size]
        if len(words) < size:
            log.warning("only %d source words available for a training set of %d", len(words), size)
        train_sets[size] = [(w, t) for w in words for t in by_source[w]]
    excluded = set(ranked[:max(train_sizes, default=0)])

    rng = np.random.default_rng(seed)
    bins = []
    for lo, hi in zip(edges, edges[1:]):
        candidates = [w for w in ranked if lo <= source_table.frequency_rank(w) < hi and w not in excluded]
        short = len(candidates) < test_per_bin
        if short:
            log.warning("bin %d-%d: only %d test words (wanted %d)", lo, hi, len(candidates), test_per_bin)
            chosen = candidates
        else:
            pick = np.sort(rng.choice(len(candidates), size=test_per_bin, replace=False))
            chosen = [candidates[i] for i in pick]
        bins.append(TestBin(lo, hi, [(w, list(by_source[w])) for w in chosen], short))
    return train_sets, bins


def train_val_split(items, fraction: float, seed: int = 0):
    """Random disjoint split; the validation part holds ``round(fraction * n)`` items.

    Works on arrays (split along the first axis) and on plain sequences.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    n = len(items)
    n_val = int(math.floor(fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    val_idx, train_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    if isinstance(items, np.ndarray):
        return items[train_idx], items[val_idx]
    return [items[i] for i in train_idx], [items[i] for i in val_idx]
