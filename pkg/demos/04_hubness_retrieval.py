"""Nearest-neighbour versus globally corrected (GC) retrieval near a hub.

Run: python demos/04_hubness_retrieval.py
"""

# %%
import math

import numpy as np

from mmdnet import GcPool, RetrievalIndex, gc_retrieve, gc_scores, nn_retrieve


def unit(polar, azimuth):
    t, a = math.radians(polar), math.radians(azimuth)
    return [math.sin(t) * math.cos(a), math.sin(t) * math.sin(a), math.cos(t)]


# A hub at the pole with a close companion, and two gold targets further out.
names = ["hub", "companion", "gold A", "gold B"]
targets = np.array([unit(0, 0), unit(10, 90), unit(35, 0), unit(35, 180)])
queries = {"query A": unit(15, 0), "query B": unit(15, 180)}
index = RetrievalIndex(targets, names)
pool = GcPool(index)

# %%
# Plain cosine picks the hub for both queries. GC asks the reverse question:
# how highly does each candidate rank the query among its own neighbours?
for label, q in queries.items():
    nn = names[nn_retrieve(q, index)[0]]
    gc = names[gc_retrieve(q, index, pool)[0]]
    print(f"{label}: NN -> {nn}, GC -> {gc}")
    scores = gc_scores(q, index, pool)
    print("   GC scores:", {n: round(float(s), 4) for n, s in zip(names, scores)})
