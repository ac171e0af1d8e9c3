import math

import numpy as np
import pytest

from mmdnet.data import EmbeddingTable, save_embeddings


def write_linear_fixture(directory, n_words=100, dim=10, seed=0):
    """Embedding pair related by an exact linear map, plus a one-to-one lexicon."""
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(n_words, dim))
    W = rng.normal(size=(dim, dim))
    save_embeddings(EmbeddingTable([f"s{i}" for i in range(n_words)], S), directory / "source.txt")
    save_embeddings(EmbeddingTable([f"t{i}" for i in range(n_words)], S @ W.T), directory / "target.txt")
    (directory / "lexicon.txt").write_text("".join(f"s{i}\tt{i}\n" for i in range(n_words)))
    return [
        f"translate.source_embeddings={directory / 'source.txt'}",
        f"translate.target_embeddings={directory / 'target.txt'}",
        f"translate.lexicon={directory / 'lexicon.txt'}",
        f"translate.train_size={n_words // 2}",
        f"translate.bin_edges=0,{n_words // 2},{n_words}",
        f"translate.test_per_bin={n_words // 2}",
        "translate.n_values=1,5",
        "train.epochs_pretrain=2000",
        "train.epochs_joint=20",
        "train.batch_unpaired=50",
        "kernel.base_scale=3",
    ]


SMALL_SYNTH = [
    "synth.dim=3",
    "synth.num_points=400",
    "synth.num_paired=6",
    "synth.num_test=200",
    "train.epochs_pretrain=100",
    "train.epochs_joint=2",
]


def _unit(polar_deg, azimuth_deg):
    t, a = math.radians(polar_deg), math.radians(azimuth_deg)
    return [math.sin(t) * math.cos(a), math.sin(t) * math.sin(a), math.cos(t)]


def hub_instance():
    """Four targets on the sphere around a hub at the pole.

    The hub h sits at the pole and a distractor d 10 degrees from it. Two
    queries lie 15 degrees from h on opposite sides, and each has its gold
    target a further 20 degrees out. Both queries have h as nearest
    neighbour, but h already has d closer than the query.
    """
    targets = np.array([_unit(0, 0), _unit(10, 90), _unit(35, 0), _unit(35, 180)])
    queries = np.array([_unit(15, 0), _unit(15, 180)])
    return targets, queries


HUB, DISTRACTOR, GOLD_A, GOLD_B = range(4)


def random_retrieval_instance(rng):
    V = int(rng.integers(1, 201))
    e = int(rng.integers(2, 6))
    kind = rng.integers(3)
    if kind == 0:
        T = rng.normal(size=(V, e))
    else:
        # Small integer vectors give many exactly tied similarities.
        T = rng.integers(-2, 3, size=(V, e)).astype(float)
        T[np.all(T == 0, axis=1), 0] = 1.0
    if V > 3:
        T[rng.integers(V)] = T[rng.integers(V)]
    y = T[rng.integers(V)].copy() if kind == 2 else rng.integers(-2, 3, size=e).astype(float)
    if not np.any(y):
        y[0] = 1.0
    return T, y


@pytest.fixture
def linear_fixture(tmp_path):
    return write_linear_fixture(tmp_path)
