"""End-to-end translation run on a small synthetic vocabulary.

Writes two embedding files and a lexicon to a temporary directory, then runs
the same pipeline as ``mmdnet translate``. Run: python demos/05_translate_fixture.py
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from mmdnet import EmbeddingTable, RunConfig, save_embeddings
from mmdnet.experiments import run_translate

work = Path(tempfile.mkdtemp())
rng = np.random.default_rng(0)
source = rng.normal(size=(100, 10))
mapping = rng.normal(size=(10, 10))
save_embeddings(EmbeddingTable([f"s{i}" for i in range(100)], source), work / "source.txt")
save_embeddings(EmbeddingTable([f"t{i}" for i in range(100)], source @ mapping.T), work / "target.txt")
(work / "lexicon.txt").write_text("".join(f"s{i}\tt{i}\n" for i in range(100)))

# %%
# The 50 most frequent words train the map; the other 50 are the test bin.
cfg = RunConfig().updated(
    translate__source_embeddings=str(work / "source.txt"),
    translate__target_embeddings=str(work / "target.txt"),
    translate__lexicon=str(work / "lexicon.txt"),
    translate__train_size=50,
    translate__bin_edges=(50, 100),
    translate__test_per_bin=50,
    train__epochs_pretrain=2000,
    train__epochs_joint=20,
    train__batch_unpaired=50,
    kernel__base_scale=3.0,
)
result = run_translate(cfg)

# %%
print("bin      method N  precision  model")
for bin_label, method, n, precision, pairs, model in result.rows:
    print(f"{bin_label:8s} {method:6s} {n:<2d} {precision:9.3f}  {model}")
