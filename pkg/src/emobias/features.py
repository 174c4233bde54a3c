"""Binary feature-vector file format.

Layout (all integers little-endian):
    magic "AFV1" | u32 count | u32 dim | count records
    record: u32 id_length | id bytes (UTF-8) | dim float32 values
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import FeatureVector

logger = logging.getLogger(__name__)

MAGIC = b"AFV1"


class TruncatedFileError(ValueError):
    """Raised when a feature file ends mid-record."""


def write_features(features: Mapping[str, FeatureVector], path: str | Path) -> None:
    if not features:
        raise ValueError("refusing to write an empty feature file")
    dims = {fv.dim for fv in features.values()}
    if len(dims) != 1:
        raise ValueError(f"feature vectors carry mixed dimensions: {sorted(dims)}")
    dim = dims.pop()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", len(features), dim))
        for pid, fv in features.items():
            encoded = pid.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(np.asarray(fv.values, dtype="<f4").tobytes())


def read_features(path: str | Path) -> dict[str, FeatureVector]:
    """Load a feature file; duplicate ids keep the last record with a warning."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MAGIC) + 8:
        raise TruncatedFileError(f"{path}: too short to hold the header")
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: bad magic bytes {data[:4]!r}")
    count, dim = struct.unpack_from("<II", data, len(MAGIC))
    if dim == 0:
        raise ValueError(f"{path}: zero feature dimension")

    features: dict[str, FeatureVector] = {}
    offset = len(MAGIC) + 8
    for record in range(count):
        if offset + 4 > len(data):
            raise TruncatedFileError(
                f"{path}: truncated at record {record} (id length)"
            )
        (id_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + id_len > len(data):
            raise TruncatedFileError(f"{path}: truncated at record {record} (id)")
        pid = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec_bytes = dim * 4
        if offset + vec_bytes > len(data):
            raise TruncatedFileError(
                f"{path}: truncated at record {record} (values for {pid!r})"
            )
        values = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if pid in features:
            logger.warning("%s: duplicate id %r, keeping the last record", path, pid)
        features[pid] = FeatureVector(painting_id=pid, values=values)
    if offset != len(data):
        logger.warning(
            "%s: %d trailing bytes after the declared %d records",
            path,
            len(data) - offset,
            count,
        )
    return features
