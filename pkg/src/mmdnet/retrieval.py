"""Cosine nearest-neighbour and globally corrected (GC) retrieval, precision@N.

All similarities go through one arithmetic path (elementwise product, row
sum, divide by the product of norms), so a vectorised query and a scalar
:func:`cosine_similarity` agree bit for bit. Rankings break similarity ties
by the lower row index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import ModelParams, forward

METHODS = ("nn", "gc")


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt((v * v).sum(axis=-1))


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = _norm(u), _norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float((u * v).sum() / (nu * nv))


@dataclass
class RetrievalIndex:
    """Target vectors with cached row norms."""

    targets: np.ndarray
    labels: Sequence[str] | None = None
    norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        if self.targets.ndim != 2 or self.targets.shape[0] == 0:
            raise ValueError("targets must be a non-empty matrix")
        self.norms = _norm(self.targets)
        if np.any(self.norms == 0):
            bad = int(np.flatnonzero(self.norms == 0)[0])
            raise ValueError(f"target row {bad} has zero norm")
        if self.labels is not None and len(self.labels) != len(self):
            raise ValueError("need one label per target row")

    def __len__(self):
        return self.targets.shape[0]

    def similarities(self, y_hat) -> np.ndarray:
        """Cosine similarity of ``y_hat`` to every target row."""
        y = np.asarray(y_hat, dtype=np.float64)
        if y.shape != (self.targets.shape[1],):
            raise ValueError(f"query must have {self.targets.shape[1]} entries, got {y.shape}")
        ny = _norm(y)
        if ny == 0:
            raise ValueError("cannot retrieve for a zero query")
        return (self.targets * y).sum(axis=1) / (self.norms * ny)


def _check_row(index: RetrievalIndex, i: int):
    if not 0 <= i < len(index):
        raise ValueError(f"row {i} out of range for an index of {len(index)} targets")


def _ordered(scores: np.ndarray, descending: bool) -> np.ndarray:
    """Row indices sorted by score, ties to the lower index."""
    keys = -scores if descending else scores
    return np.lexsort((np.arange(len(scores)), keys))


def rank_in_targets(y_hat, target_index: int, index: RetrievalIndex) -> int:
    """1-based rank of one target row in the similarity ordering for ``y_hat``."""
    _check_row(index, target_index)
    sims = index.similarities(y_hat)
    s = sims[target_index]
    ahead = np.count_nonzero(sims > s) + np.count_nonzero(sims[:target_index] == s)
    return int(ahead) + 1


def _check_n(n: int, index: RetrievalIndex):
    if not 1 <= n <= len(index):
        raise ValueError(f"N must lie in [1, {len(index)}], got {n}")


def nn_retrieve(y_hat, index: RetrievalIndex, n: int = 1) -> list[int]:
    """The ``n`` target rows most cosine-similar to ``y_hat``, best first."""
    _check_n(n, index)
    return _ordered(index.similarities(y_hat), descending=True)[:n].tolist()


class GcPool:
    """Reference points for GC ranking, with each candidate's sorted similarities.

    Building the pool costs one similarity per (target, pool point) pair;
    queries then rank by binary search.
    """

    def __init__(self, index: RetrievalIndex, indices: Iterable[int] | None = None,
                 chunk_elements: int = 1 << 22):
        idx = np.arange(len(index)) if indices is None else np.asarray(list(indices), dtype=np.int64)
        if idx.size == 0:
            raise ValueError("a GC pool needs at least one point")
        if idx.min() < 0 or idx.max() >= len(index):
            raise ValueError("pool indices out of range")
        self.index = index
        self.indices = idx
        pool = index.targets[idx]
        pool_norms = index.norms[idx]
        e = index.targets.shape[1]
        rows = max(1, chunk_elements // max(1, idx.size * e))
        sorted_sims = np.empty((len(index), idx.size))
        for start in range(0, len(index), rows):
            t = index.targets[start:start + rows]
            dots = (t[:, None, :] * pool[None, :, :]).sum(axis=2)
            block = dots / (index.norms[start:start + rows, None] * pool_norms[None, :])
            block.sort(axis=1)
            sorted_sims[start:start + rows] = block
        self._sorted = sorted_sims

    @classmethod
    def random(cls, index: RetrievalIndex, size: int, seed: int = 0) -> GcPool:
        """Pool of ``size`` distinct target rows drawn uniformly."""
        size = min(size, len(index))
        rng = np.random.default_rng(seed)
        return cls(index, np.sort(rng.choice(len(index), size=size, replace=False)))

    def __len__(self):
        return self.indices.size

    def query_ranks(self, sims: np.ndarray) -> np.ndarray:
        """For each candidate y: 1 + number of pool points more similar to y than the query."""
        p = self._sorted.shape[1]
        counts = np.array([p - np.searchsorted(row, s, side="right") for row, s in zip(self._sorted, sims)])
        return counts + 1


def gc_scores(y_hat, index: RetrievalIndex, pool: GcPool, distance: bool = False) -> np.ndarray:
    """GC score of every target row; lower is better.

    The score is the rank of the query among the candidate's pool neighbours
    minus the candidate's cosine similarity to the query. With
    ``distance=True`` the cosine distance ``1 - cos`` is subtracted instead.
    """
    if pool.index is not index:
        raise ValueError("pool was built for a different index")
    sims = index.similarities(y_hat)
    ranks = pool.query_ranks(sims)
    tiebreak = 1.0 - sims if distance else sims
    return ranks - tiebreak


def gc_retrieve(y_hat, index: RetrievalIndex, pool: GcPool | None = None, n: int = 1,
                distance: bool = False) -> list[int]:
    """The ``n`` target rows with the smallest GC score, best first."""
    _check_n(n, index)
    pool = pool or GcPool(index)
    return _ordered(gc_scores(y_hat, index, pool, distance), descending=False)[:n].tolist()


def retrieve(y_hat, index: RetrievalIndex, method: str, n: int, pool: GcPool | None = None) -> list[int]:
    if method == "nn":
        return nn_retrieve(y_hat, index, n)
    if method == "gc":
        return gc_retrieve(y_hat, index, pool, n)
    raise ValueError(f"unknown retrieval method {method!r}; expected one of {METHODS}")


def precision_at_n(params: ModelParams | None, test_pairs, index: RetrievalIndex, method: str = "nn",
                   n: int = 1, pool: GcPool | None = None) -> float:
    """Fraction of test queries with a gold target among the top ``n`` retrieved.

    Args:
        params: Mapping applied to the sources; ``None`` uses them as given.
        test_pairs: ``(source vector, gold target row indices)`` items.
        index: Targets to retrieve from.
        method: ``"nn"`` or ``"gc"``.
        n: List length.
        pool: GC pool; defaults to every target row.
    """
    test_pairs = list(test_pairs)
    if not test_pairs:
        raise ValueError("precision needs at least one test pair")
    sources = np.array([np.asarray(s, dtype=np.float64) for s, _ in test_pairs])
    mapped = sources if params is None else forward(params, sources)
    if method == "gc" and pool is None:
        pool = GcPool(index)
    hits = 0
    for y_hat, (_, gold) in zip(mapped, test_pairs):
        if set(retrieve(y_hat, index, method, n, pool)) & set(gold):
            hits += 1
    return hits / len(test_pairs)
