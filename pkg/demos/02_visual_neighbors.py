"""Exact nearest-neighbor retrieval over painting feature vectors.

Vectors are L2-normalized at build time, so retrieval uses cosine
distance and is invariant to the scale of the raw features. Results are
deterministic: ties break by painting id.
"""

import tempfile
from pathlib import Path

import numpy as np

from emobias import FeatureVector, batch_query, build_index, query
from emobias.knn import load_index_cache, write_index_cache

rng = np.random.default_rng(1)

# 40 paintings in 4 visual groups of 10
features = {}
for group in range(4):
    center = np.zeros(16)
    center[group * 4] = 8.0
    for i in range(10):
        pid = f"g{group}-p{i}"
        features[pid] = FeatureVector(pid, center + rng.normal(0, 0.3, 16))

index = build_index(features)
print(f"indexed {len(index)} paintings, dimension {index.dim}")

result = query(index, "g0-p0", 5)
print("\n5 nearest neighbors of g0-p0 (all from its own group):")
for pid, distance in result.neighbors:
    print(f"  {pid:8s} cosine distance {distance:.4f}")

# scale invariance: multiplying every raw vector by 1000 changes nothing
scaled = {
    pid: FeatureVector(pid, fv.values * 1000.0) for pid, fv in features.items()
}
assert query(build_index(scaled), "g0-p0", 5).ids() == result.ids()
print("\nscaling all raw vectors by 1000 leaves the ranking unchanged")

# batch form: one call for the 1-NN graph
graph = batch_query(index, list(index.ids), 1)
cross_group = sum(
    1 for r in graph if r.neighbors[0][0].split("-")[0] != r.query_id.split("-")[0]
)
print(f"1-NN graph: {cross_group}/{len(graph)} paintings cross group lines")

# the index caches to disk; a cache for a different id set is rejected
with tempfile.TemporaryDirectory() as tmp:
    cache = Path(tmp) / "index.afvi"
    write_index_cache(index, cache)
    assert load_index_cache(cache, expected_ids=index.ids) is not None
    assert load_index_cache(cache, expected_ids=["other"]) is None
    print(f"cache round-trip OK ({cache.stat().st_size} bytes)")
