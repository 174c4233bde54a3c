"""Exact k-nearest-neighbor retrieval over painting feature vectors.

Distance is cosine (1 - dot product of L2-normalized rows). The scan is
brute force and vectorized; results are fully deterministic, with ties
broken by lexicographic painting id.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import FeatureVector
from .features import MAGIC, TruncatedFileError

CACHE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NeighborList:
    query_id: str
    neighbors: tuple[tuple[str, float], ...]

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.neighbors]


class SimilarityIndex:
    """Immutable index of L2-normalized feature rows."""

    def __init__(self, ids: Sequence[str], matrix: np.ndarray):
        if len(ids) != matrix.shape[0]:
            raise ValueError("ids and matrix rows disagree")
        self.ids: list[str] = list(ids)
        self.matrix = matrix  # float64, rows unit-norm
        self.dim = int(matrix.shape[1])
        self._row_of = {pid: i for i, pid in enumerate(self.ids)}
        # lexicographic rank per row, used for deterministic tie-breaks
        self._id_rank = np.argsort(np.argsort(np.asarray(self.ids, dtype=object)))

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, painting_id: str) -> bool:
        return painting_id in self._row_of

    def row_of(self, painting_id: str) -> int:
        try:
            return self._row_of[painting_id]
        except KeyError:
            raise KeyError(f"unknown painting id: {painting_id!r}") from None


def build_index(features: Mapping[str, FeatureVector]) -> SimilarityIndex:
    """Normalize all vectors into an index; zero vectors are rejected."""
    if not features:
        raise ValueError("cannot build an index from zero vectors")
    dims = {fv.dim for fv in features.values()}
    if len(dims) != 1:
        raise ValueError(f"feature vectors carry mixed dimensions: {sorted(dims)}")
    ids = list(features.keys())
    matrix = np.stack(
        [np.asarray(features[pid].values, dtype=np.float64) for pid in ids]
    )
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm feature vector for {ids[int(zero[0])]!r}")
    matrix /= norms[:, None]
    return SimilarityIndex(ids, matrix)


def query(index: SimilarityIndex, query_id: str, k: int) -> NeighborList:
    """The k nearest neighbors of a painting, ascending by cosine distance.

    The query itself never appears in the result; ties are broken by
    lexicographic painting id. Requires 1 <= k <= N-1.
    """
    return batch_query(index, [query_id], k)[0]


def batch_query(
    index: SimilarityIndex, ids: Sequence[str], k: int
) -> list[NeighborList]:
    """Elementwise identical to query(); empty id list yields empty result."""
    if not ids:
        return []
    n = len(index)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    unknown = [pid for pid in ids if pid not in index]
    if unknown:
        raise KeyError(f"unknown painting ids: {unknown}")

    # one matrix-vector product per query: results are bitwise identical
    # under any batch partitioning (a blocked matmul would not be)
    results: list[NeighborList] = []
    for pid in ids:
        row = index.row_of(pid)
        sims = index.matrix @ index.matrix[row]
        dist = np.maximum(1.0 - sims, 0.0)
        dist[row] = np.inf  # never return the query itself
        # order by distance, then id rank; lexsort's last key is primary
        order = np.lexsort((index._id_rank, dist))[:k]
        results.append(
            NeighborList(
                query_id=pid,
                neighbors=tuple(
                    (index.ids[int(j)], float(dist[int(j)])) for j in order
                ),
            )
        )
    return results


def pairwise_distance(index: SimilarityIndex, id_a: str, id_b: str) -> float:
    """Cosine distance between two indexed paintings."""
    a = index.matrix[index.row_of(id_a)]
    b = index.matrix[index.row_of(id_b)]
    return max(1.0 - float(np.dot(a, b)), 0.0)


def write_index_cache(index: SimilarityIndex, path: str | Path) -> None:
    """Persist the normalized rows: feature layout prefixed by a version."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", CACHE_FORMAT_VERSION))
        fh.write(struct.pack("<II", len(index), index.dim))
        for pid, row in zip(index.ids, index.matrix):
            encoded = pid.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(row.astype("<f8").tobytes())


def load_index_cache(
    path: str | Path, expected_ids: Sequence[str] | None = None
) -> SimilarityIndex | None:
    """Load a cached index.

    Returns None (cache invalid) when the format version is unknown or
    the stored id set differs from expected_ids.
    """
    path = Path(path)
    data = path.read_bytes()
    header = len(MAGIC) + 4 + 8
    if len(data) < header:
        raise TruncatedFileError(f"{path}: too short to hold the header")
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: bad magic bytes {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, len(MAGIC))
    if version != CACHE_FORMAT_VERSION:
        return None
    count, dim = struct.unpack_from("<II", data, len(MAGIC) + 4)

    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float64)
    offset = header
    for record in range(count):
        if offset + 4 > len(data):
            raise TruncatedFileError(f"{path}: truncated at record {record}")
        (id_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + id_len + dim * 8 > len(data):
            raise TruncatedFileError(f"{path}: truncated at record {record}")
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        rows[record] = np.frombuffer(data, dtype="<f8", count=dim, offset=offset)
        offset += dim * 8
    if expected_ids is not None and set(expected_ids) != set(ids):
        return None
    return SimilarityIndex(ids, rows)
